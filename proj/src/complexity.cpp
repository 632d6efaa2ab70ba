#include "hse/complexity.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "hse/error.h"
#include "hse/model.h"
#include "hse/ops.h"

namespace hse {

namespace {

std::uint64_t activation_cost(const LayerPlan& p, const MacCosts& c) {
  switch (p.activation) {
    case Activation::kNone: return 0;
    case Activation::kRelu: return p.complex ? c.crelu : c.relu;
    case Activation::kTanh: return p.complex ? c.ctanh : c.tanh;
    case Activation::kSigmoid: return p.complex ? c.ctanh : c.sigmoid;
  }
  return 0;
}

const char* row_domain(bool complex) { return complex ? "complex" : "real"; }

std::string giga(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f G", static_cast<double>(v) / 1e9);
  return buf;
}

}  // namespace

ComplexityReport count_params(const ModelSpec& spec) {
  validate(spec);
  ComplexityReport r;
  r.model = spec.name;
  for (const LayerPlan& p : plan_layers(spec)) {
    r.rows.push_back({p.name, row_domain(p.complex), p.params(), 0});
    r.params += p.params();
  }
  return r;
}

std::size_t stored_param_scalars(const ModelSpec& spec) {
  Model m(spec);
  return m.stored_scalars();
}

ComplexityReport count_macs(const ModelSpec& spec, std::size_t frames,
                            const MacCosts& costs) {
  if (frames == 0) throw ConfigError("frames must be at least 1");
  ComplexityReport r = count_params(spec);
  r.frames = frames;
  std::vector<ComplexityRow> rows;
  auto book = [&](ComplexityRow row, bool complex) {
    (complex ? r.macs_complex : r.macs_real) += row.macs;
    rows.push_back(std::move(row));
  };
  if (spec.domain == Domain::kHybrid) {
    book({"real.input.mag", "real", 0, costs.magnitude * spec.bins * frames},
         false);
  }
  for (const LayerPlan& p : plan_layers(spec)) {
    book({p.name, row_domain(p.complex), p.params(), p.macs_per_frame() * frames},
         p.complex);
    const std::uint64_t act = activation_cost(p, costs);
    if (act) {
      book({p.name + "." + activation_name(p.activation), row_domain(p.complex),
            0, act * p.activation_elements() * frames},
           p.complex);
    }
  }
  r.rows = std::move(rows);
  return r;
}

MacCounter instrumented_macs(const ModelSpec& spec, std::size_t frames,
                             const MacCosts& costs) {
  if (frames == 0) throw ConfigError("frames must be at least 1");
  Model m(spec);
  const ComplexTensor z = ComplexTensor::zeros(Shape(1, 1, spec.bins, frames));
  MacCounter counter;
  counter.costs = costs;
  {
    ScopedMacCounter scope(counter);
    m.forward(z);
  }
  return counter;
}

std::string render_report(const ComplexityReport& r) {
  std::ostringstream os;
  char buf[200];
  os << "model " << r.model << "  frames " << r.frames << '\n';
  std::snprintf(buf, sizeof buf, "%-28s %-8s %12s %16s\n", "layer", "domain",
                "params", "macs");
  os << buf;
  for (const ComplexityRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-28s %-8s %12zu %16llu\n", row.name.c_str(),
                  row.domain.c_str(), row.params,
                  static_cast<unsigned long long>(row.macs));
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "total params %zu  MACs[R] %s  MACs[C] %s  MACs %s\n", r.params,
                giga(r.macs_real).c_str(), giga(r.macs_complex).c_str(),
                giga(r.macs_total()).c_str());
  os << buf;
  return os.str();
}

std::string render_report_csv(const ComplexityReport& r) {
  std::ostringstream os;
  os << "model,layer,domain,params,macs\n";
  for (const ComplexityRow& row : r.rows) {
    os << r.model << ',' << row.name << ',' << row.domain << ',' << row.params
       << ',' << row.macs << '\n';
  }
  os << r.model << ",total,all," << r.params << ',' << r.macs_total() << '\n';
  return os.str();
}

std::vector<CompareRow> compare(const std::vector<ComplexityReport>& reports) {
  if (reports.size() < 2) {
    throw ConfigError("compare needs at least two models, got " +
                      std::to_string(reports.size()));
  }
  std::vector<CompareRow> rows;
  std::uint64_t lowest = UINT64_MAX;
  for (const ComplexityReport& r : reports) {
    rows.push_back({r.model, r.params, r.macs_real, r.macs_complex,
                    r.macs_total(), false});
    lowest = std::min(lowest, r.macs_total());
  }
  for (CompareRow& row : rows) row.lowest = row.macs_total == lowest;
  return rows;
}

std::string render_compare(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-12s %10s %12s %12s %12s\n", "model",
                "Param", "MACs[R]", "MACs[C]", "MACs");
  os << buf;
  for (const CompareRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %9.1fk %12s %12s %12s%s\n",
                  r.model.c_str(), r.params / 1000.0, giga(r.macs_real).c_str(),
                  giga(r.macs_complex).c_str(), giga(r.macs_total).c_str(),
                  r.lowest ? "  *" : "");
    os << buf;
  }
  return os.str();
}

}  // namespace hse
