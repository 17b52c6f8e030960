#include "diracsim/cli.hpp"

int main(int argc, char** argv) { return diracsim::run_cli(argc, argv); }
