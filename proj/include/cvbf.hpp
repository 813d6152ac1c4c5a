#pragma once

#include "cvbf/baselines.hpp"
#include "cvbf/bayes_factor.hpp"
#include "cvbf/core.hpp"
#include "cvbf/io.hpp"
#include "cvbf/kde.hpp"
#include "cvbf/kernels.hpp"
#include "cvbf/marginal.hpp"
#include "cvbf/optimize.hpp"
#include "cvbf/parallel.hpp"
#include "cvbf/predictive.hpp"
#include "cvbf/quadrature.hpp"
#include "cvbf/random.hpp"
#include "cvbf/sim.hpp"
#include "cvbf/stats.hpp"
