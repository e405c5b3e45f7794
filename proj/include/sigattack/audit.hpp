#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sigattack/domain.hpp"
#include "sigattack/features.hpp"

namespace sigattack {

/// One controller optimization as seen by the logger: the plan chosen for the barrier that
/// starts at `tick`, the features an observer computed at that instant, and the ETAs of the
/// vehicles on the four phases of that barrier (slot order).
struct AuditRecord {
  Tick tick = 0;
  TimingPlan plan;
  int length1 = 0;
  int length2 = 0;
  double predicted_cost = 0.0;
  FeatureVector features;
  std::array<std::vector<double>, 4> slot_etas;

  std::uint64_t feature_digest() const;
  bool operator==(const AuditRecord&) const = default;
};

/// Single-line text form:
/// `A <tick> <M|m> <lead r1 L|T> <lead r2 L|T> <g_d1> <g_d2> <g_g1> <g_g2> <len1> <len2> <cost>
///  <digest> F <48 features> E <n> <etas...> x4`
std::string format_audit(const AuditRecord& record);
AuditRecord parse_audit(std::string_view line);

void write_audit_log(std::ostream& out, const std::vector<AuditRecord>& records);
std::vector<AuditRecord> read_audit_log(std::istream& in);

}  // namespace sigattack
