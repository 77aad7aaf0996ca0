#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char** argv) { return mentor::cli::run_cli(argc, argv, std::cout, std::cerr); }
