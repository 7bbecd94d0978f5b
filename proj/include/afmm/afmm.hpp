#ifndef AFMM_AFMM_HPP
#define AFMM_AFMM_HPP

#include "afmm/analysis.hpp"
#include "afmm/core.hpp"
#include "afmm/grid.hpp"
#include "afmm/interp.hpp"
#include "afmm/io.hpp"
#include "afmm/march.hpp"
#include "afmm/project.hpp"
#include "afmm/seed.hpp"
#include "afmm/shapes.hpp"
#include "afmm/systems.hpp"

#endif  // AFMM_AFMM_HPP
