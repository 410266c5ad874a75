#pragma once

#include "chiral_drain/core.hpp"
#include "chiral_drain/entanglement.hpp"
#include "chiral_drain/gaussian.hpp"
#include "chiral_drain/io.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/lyapunov.hpp"
#include "chiral_drain/spectral.hpp"
#include "chiral_drain/steady.hpp"
#include "chiral_drain/sweep.hpp"
#include "chiral_drain/symmetry.hpp"
