#include "sepvar/trace.hpp"

#include <iomanip>
#include <stdexcept>

namespace sepvar {

void OptimizationTrace::append(const TraceRecord& record) {
  if (!records_.empty() && record.iteration <= records_.back().iteration) {
    throw std::invalid_argument("trace iterations must be strictly increasing");
  }
  records_.push_back(record);
}

std::int64_t OptimizationTrace::improvements() const {
  std::int64_t count = 0;
  for (std::size_t k = 1; k < records_.size(); ++k) {
    if (records_[k].best_hsd < records_[k - 1].best_hsd) ++count;
  }
  return count;
}

void OptimizationTrace::write_csv_rows(std::ostream& out) const {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : records_) {
    out << r.iteration << ',' << r.evaluations << ',' << r.estimator_calls << ','
        << r.proposal_hsd << ',' << r.best_hsd << ',' << std::setprecision(6) << r.wall_seconds
        << std::setprecision(17) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sepvar
