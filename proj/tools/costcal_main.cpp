#include "costcal/cli.hpp"

int main(int argc, char** argv) { return costcal::cli::run(argc, argv); }
