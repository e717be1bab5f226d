#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return advrl::cli::main(argc, argv, std::cout, std::cerr); }
