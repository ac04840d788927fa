#pragma once

#include "nldp/constants.hpp"
#include "nldp/inequalities.hpp"
#include "nldp/io.hpp"
#include "nldp/reglab.hpp"
#include "nldp/scaling.hpp"
#include "nldp/solver.hpp"

namespace nldp {

json to_json(const Point& x);
json to_json(const ProblemParams& P);
json to_json(const ConstantsBundle& b);
json to_json(const SolveReport& r);
json to_json(const IneqReport& r);
json to_json(const IntegrabilityResult& r);
json to_json(const BoundCheck& c);
json to_json(const HypothesisCheck& c);
json to_json(const GrowthLemmaInstance& g);
json to_json(const HolderFit& f);
json to_json(const OscillationTrace& t);

// level, radius, sup, inf, osc, bound, b, c
CsvTable trace_table(const OscillationTrace& t);
CsvTable holder_table(const HolderFit& f, const std::vector<Oscillation>& osc);
CsvTable residual_table(const SolveReport& r);

}  // namespace nldp
