#pragma once

// Umbrella header: strong-duality certification and global dual solves for
// QCQPs with block-separable quadratic constraints.

#include "sepqp/linalg.hpp"
#include "sepqp/model.hpp"
#include "sepqp/io.hpp"
#include "sepqp/congruence.hpp"
#include "sepqp/certify.hpp"
#include "sepqp/dual.hpp"
#include "sepqp/rank1.hpp"
#include "sepqp/oracle.hpp"
#include "sepqp/rls.hpp"
#include "sepqp/generate.hpp"
