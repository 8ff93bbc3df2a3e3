#pragma once

#include "vinetail/bicop.hpp"
#include "vinetail/marginals.hpp"
#include "vinetail/taildep.hpp"
#include "vinetail/vine.hpp"

#include <json.hpp>

namespace vinetail {

using Json = nlohmann::json;

// Doubles are written with the shortest representation that reads back to
// the same value, so every round trip below is bit-exact.

void to_json(Json& j, const BivariateCopula& c);
void from_json(const Json& j, BivariateCopula& c);

void to_json(Json& j, const MarginalSpec& s);
void from_json(const Json& j, MarginalSpec& s);

void to_json(Json& j, const ArGarchParams& p);
void from_json(const Json& j, ArGarchParams& p);

// Parameter, spec and diagnostics blocks; the series are left out unless
// asked for.
Json marginal_json(const MarginalFit& fit, bool with_series = false);

void to_json(Json& j, const VineEdge& e);
void to_json(Json& j, const VineStructure& s);
VineStructure structure_from_json(const Json& j);

void to_json(Json& j, const VineModel& m);
void from_json(const Json& j, VineModel& m);

void to_json(Json& j, const TailMeasureResult& r);
void to_json(Json& j, const LambdaEstimate& e);
void to_json(Json& j, const PairTail& t);

Json matrix_json(const MatrixXd& m);

// Non-finite values become null.
Json number_or_null(double v);

}  // namespace vinetail
