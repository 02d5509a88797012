#pragma once

#include "fsmooth/functionals.hpp"
#include "fsmooth/gridopt.hpp"
#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/simulate.hpp"
#include "fsmooth/smoothness.hpp"
#include "fsmooth/valuation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace fsmooth::io {

using nlohmann::json;

// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);

// kind,p,q,measure,t,T_minus_t,value,se,inner_budget
void write_curve_csv(std::ostream& os, const std::vector<NormCurve>& curves);
// grid_kind,theta,n,error,se
void write_rate_csv(std::ostream& os, const RateStudy& study);

struct ProbeRow {
    double t = 0.0;
    std::vector<double> x;
    ValueDerivatives v;
};
// t,x_1..x_d,v,v_se,dv_1..,dv_se_1..,d2v_11..,d2v_se_11..
void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows);

// Little-endian layout: uint64 d, uint64 m (steps), uint64 n_paths, float64 T,
// then n_paths x (m+1) x d float64 states, row-major.
void write_path_dump(std::ostream& os, const PathBatch& paths);
struct PathDump {
    std::uint64_t dim = 0, steps = 0, n_paths = 0;
    double horizon = 0.0;
    std::vector<double> states;
};
PathDump read_path_dump(std::istream& is);

// Doubles that may be infinite are written as strings.
json number(double v);

json to_json(const ValidationReport& r);
json to_json(const ConditionalMomentReport& r);
json to_json(const NormCurve& c, bool with_points = true);
json to_json(const ThetaEstimate& e);
json to_json(const PhiLadder& l);
json to_json(const SmoothnessReport& r);
json to_json(const InterpolationReport& r);
json to_json(const RateStudy& s);
json to_json(const ThetaOneReport& r);

const char* grid_kind_name(GridKind k) noexcept;

}  // namespace fsmooth::io
