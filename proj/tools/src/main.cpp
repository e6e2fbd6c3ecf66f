#include "eventcast/cli.hpp"

int main(int argc, char** argv) { return eventcast::run_cli(argc, argv); }
