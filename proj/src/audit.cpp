#include "sigattack/audit.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "sigattack/util.hpp"

namespace sigattack {

std::uint64_t AuditRecord::feature_digest() const {
  Fnv1a h;
  h.update_value(static_cast<int>(features.barrier));
  for (const auto& row : features.values)
    for (const double v : row) h.update_value(v);
  return h.digest();
}

std::string format_audit(const AuditRecord& r) {
  const auto& p = r.plan;
  std::string line = fmt::format("A {} {} {} {} {} {} {} {} {} {} {} {:016x} F", r.tick,
                                 barrier_code(p.barrier), p.left_leads[0] ? 'L' : 'T',
                                 p.left_leads[1] ? 'L' : 'T', p.g_d1, p.g_d2, p.g_g1, p.g_g2,
                                 r.length1, r.length2, r.predicted_cost, r.feature_digest());
  for (const double v : r.features.flat()) line += fmt::format(" {}", v);
  line += " E";
  for (const auto& etas : r.slot_etas) {
    line += fmt::format(" {}", etas.size());
    for (const double e : etas) line += fmt::format(" {}", e);
  }
  return line;
}

AuditRecord parse_audit(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [&](const char* what) {
    return std::runtime_error(fmt::format("audit line: {}: '{:.60}'", what, text));
  };
  std::string tag, barrier, lead1, lead2, digest, f, e;
  AuditRecord r;
  if (!(in >> tag) || tag != "A") throw fail("expected 'A'");
  if (!(in >> r.tick >> barrier >> lead1 >> lead2 >> r.plan.g_d1 >> r.plan.g_d2 >> r.plan.g_g1 >>
        r.plan.g_g2 >> r.length1 >> r.length2 >> r.predicted_cost >> digest >> f) ||
      f != "F")
    throw fail("bad header fields");
  if (barrier != "M" && barrier != "m") throw fail("bad barrier code");
  r.plan.barrier = barrier == "M" ? Barrier::major : Barrier::minor;
  r.plan.left_leads = {lead1 == "L", lead2 == "L"};
  std::vector<double> flat(kFeatureColumns);
  for (auto& v : flat)
    if (!(in >> v)) throw fail("truncated features");
  r.features = FeatureVector::from_flat(r.plan.barrier, flat);
  if (!(in >> e) || e != "E") throw fail("expected 'E'");
  for (auto& etas : r.slot_etas) {
    std::size_t n = 0;
    if (!(in >> n)) throw fail("truncated eta list");
    etas.resize(n);
    for (auto& v : etas)
      if (!(in >> v)) throw fail("truncated eta list");
  }
  if (fmt::format("{:016x}", r.feature_digest()) != digest) throw fail("feature digest mismatch");
  return r;
}

void write_audit_log(std::ostream& out, const std::vector<AuditRecord>& records) {
  for (const auto& r : records) out << format_audit(r) << '\n';
}

std::vector<AuditRecord> read_audit_log(std::istream& in) {
  std::vector<AuditRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_audit(line));
  }
  return out;
}

}  // namespace sigattack
