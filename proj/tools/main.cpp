#include <iostream>

#include "intopic/cli.hpp"

int main(int argc, char** argv)
{
    return intopic::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
