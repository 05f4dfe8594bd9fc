#include "evtwin/cli.hpp"

int main(int argc, char** argv) { return evtwin::run_cli(argc, argv); }
