#include <iostream>

#include "ntlgen/cli.hpp"

int main(int argc, char** argv) { return ntlgen::cli::run(argc, argv, std::cout, std::cerr); }
