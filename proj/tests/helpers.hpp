#pragma once

// Unit-test prelude: the shared fixtures plus the test framework.

#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
