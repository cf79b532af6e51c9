#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return mpvar::cli::run(argc, argv, std::cout, std::cerr); }
