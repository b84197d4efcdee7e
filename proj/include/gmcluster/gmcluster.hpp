#pragma once

/// \file
/// Umbrella header: left-Gram-matrix clustering for N objects with P >> N
/// features. Everything lives in namespace gmcluster.

#include "gmcluster/assignment.hpp"
#include "gmcluster/csv.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/gram_transform.hpp"
#include "gmcluster/hier_init.hpp"
#include "gmcluster/metrics.hpp"
#include "gmcluster/mixture_fit.hpp"
#include "gmcluster/mixture_spec.hpp"
#include "gmcluster/model_select.hpp"
#include "gmcluster/synth.hpp"
#include "gmcluster/version.hpp"
