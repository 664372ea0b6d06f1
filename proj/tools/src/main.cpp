#include <iostream>

#include "bouss_cli/commands.hpp"

int main(int argc, char** argv) { return bouss::cli::run_cli(argc, argv, std::cout, std::cerr); }
