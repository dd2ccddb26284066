#include <iostream>

#include "rbo/cli.h"

int main(int argc, char** argv) { return rbo::cli_main(argc, argv, std::cout, std::cerr); }
