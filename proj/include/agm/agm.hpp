// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_AGM_HPP
#define AGM_AGM_HPP

#include "agm/affinity.hpp"
#include "agm/eval.hpp"
#include "agm/grid.hpp"
#include "agm/instance.hpp"
#include "agm/merge_graph.hpp"
#include "agm/neighbor_scheme.hpp"
#include "agm/oracle.hpp"
#include "agm/pipeline.hpp"
#include "agm/png_io.hpp"
#include "agm/rng.hpp"
#include "agm/roi.hpp"
#include "agm/superclass.hpp"
#include "agm/tensor_io.hpp"

#endif  // AGM_AGM_HPP
