#include "gmleb/cli.hpp"

int main(int argc, char** argv) { return gmleb::cli::run(argc, argv); }
