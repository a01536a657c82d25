#include <iostream>

#include "qtree/cli.hpp"

int main(int argc, char** argv) { return qtree::run(argc, argv, std::cout, std::cerr); }
