#include "aml/cli.hpp"

int main(int argc, char** argv) { return aml::cli::run(argc, argv); }
