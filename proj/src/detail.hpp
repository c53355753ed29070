#pragma once

#include "toriclab/error.hpp"
#include "toriclab/potential.hpp"

#include <string>

namespace toriclab::detail {

inline void require_order(const JetEvaluation& jet, int order, const char* module, const char* op) {
  if (jet.order < order)
    throw Error(ErrorKind::InsufficientJetOrder, module, op,
                "needs jet order >= " + std::to_string(order) + ", got " + std::to_string(jet.order));
}

inline void require_weights(const JetEvaluation& jet, const WeightData& w, const char* module, const char* op) {
  if (w.v.size() != jet.dimension() || w.xi.size() != jet.dimension())
    throw Error(ErrorKind::InvalidParams, module, op, "weight lengths must equal the jet dimension");
}

}  // namespace toriclab::detail
