#include "tqnf/app.hpp"

int main(int argc, char** argv) { return tqnf::app::main(argc, argv); }
