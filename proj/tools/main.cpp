#include <iostream>

#include "app/app.hpp"

int main(int argc, char** argv) { return dic::app::run(argc, argv, std::cout, std::cerr); }
