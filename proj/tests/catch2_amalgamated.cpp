// Builds the Catch2 v3 amalgamated implementation (with its default main)
// into a static library the test binaries link against.
#include <catch2/catch_amalgamated.cpp>
