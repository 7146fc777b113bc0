#include <copreg/cli.hpp>

int main(int argc, char** argv) { return copreg::cli::main_entry(argc, argv); }
