#include "sigattack/features.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sigattack {

namespace {
constexpr std::array<std::string_view, kFeatureKinds> kNames{"QL", "NAV", "HW", "ETA", "VD", "FR"};
}

std::string_view feature_name(FeatureKind kind) { return kNames[static_cast<int>(kind)]; }

FeatureKind feature_from_name(std::string_view name) {
  for (int k = 0; k < kFeatureKinds; ++k)
    if (kNames[k] == name) return static_cast<FeatureKind>(k);
  throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

FeatureParams FeatureParams::from(const ScenarioConfig& c) {
  return {c.comm_range, c.floor_speed, c.queue_speed, c.free_flow_speed, c.fr_window, c.hw_cap};
}

std::vector<double> FeatureVector::flat() const {
  std::vector<double> out;
  out.reserve(kFeatureColumns);
  for (const auto& row : values) out.insert(out.end(), row.begin(), row.end());
  return out;
}

FeatureVector FeatureVector::from_flat(Barrier barrier, std::span<const double> flat) {
  if (flat.size() != kFeatureColumns) throw std::invalid_argument("feature vector: wrong width");
  FeatureVector fv;
  fv.barrier = barrier;
  for (int k = 0; k < kFeatureKinds; ++k)
    for (int s = 0; s < kSlots; ++s) fv.values[k][s] = flat[k * kSlots + s];
  return fv;
}

PhaseId slot_phase(Barrier planned, int slot) {
  if (slot < 0 || slot >= kSlots) throw std::out_of_range("slot");
  return phases_of(slot < 4 ? planned : other(planned))[slot % 4];
}

int phase_slot(Barrier planned, PhaseId phase) {
  const int base = phase.barrier() == planned ? 0 : 4;
  const auto four = phases_of(phase.barrier());
  for (int i = 0; i < 4; ++i)
    if (four[i] == phase) return base + i;
  throw std::logic_error("phase not in its own barrier");
}

void ObservationHistory::observe(std::span<const BsmRecord> bsms, double time) {
  std::unordered_map<std::uint64_t, PhaseId> now;
  now.reserve(bsms.size());
  for (const auto& b : bsms) {
    now.emplace(b.vehicle_id, b.phase);
    first_.try_emplace(b.vehicle_id, FirstSeen{time, b.position});
  }
  for (const auto& [id, phase] : current_) {
    if (now.contains(id)) continue;
    crossing_times_[phase.index()].push_back(time);
    first_.erase(id);
  }
  current_ = std::move(now);
  for (auto& q : crossing_times_)
    while (!q.empty() && q.front() <= time - fr_window_) q.pop_front();
}

const ObservationHistory::FirstSeen* ObservationHistory::first_seen(std::uint64_t id) const {
  const auto it = first_.find(id);
  return it == first_.end() ? nullptr : &it->second;
}

std::size_t ObservationHistory::crossings(PhaseId phase, double from, double to) const {
  const auto& q = crossing_times_[phase.index()];
  return static_cast<std::size_t>(
      std::count_if(q.begin(), q.end(), [&](double t) { return t > from && t <= to; }));
}

FeatureVector extract(std::span<const BsmRecord> bsms, const ObservationHistory& history,
                      Barrier planned, double time, const FeatureParams& params) {
  FeatureVector fv;
  fv.barrier = planned;
  std::array<std::vector<std::pair<double, double>>, 8> moving;  // (position, speed)

  for (const auto& b : bsms) {
    if (b.position > params.comm_range) continue;
    const int slot = phase_slot(planned, b.phase);
    fv.at(FeatureKind::nav, slot) += 1.0;
    fv.at(FeatureKind::eta, slot) += eta_of(b.position, b.speed, params.floor_speed);
    if (b.speed < params.queue_speed) {
      fv.at(FeatureKind::ql, slot) += 1.0;
    } else {
      moving[slot].emplace_back(b.position, b.speed);
    }
    if (const auto* seen = history.first_seen(b.vehicle_id)) {
      const double lost =
          (time - seen->time) - (seen->position - b.position) / params.free_flow_speed;
      fv.at(FeatureKind::vd, slot) += std::max(0.0, lost);
    }
  }

  for (int slot = 0; slot < kSlots; ++slot) {
    auto& m = moving[slot];
    double hw = params.hw_cap;
    if (m.size() >= 2) {
      std::sort(m.begin(), m.end());
      double sum = 0.0;
      for (std::size_t i = 1; i < m.size(); ++i) sum += (m[i].first - m[i - 1].first) / m[i].second;
      hw = std::min(params.hw_cap, sum / static_cast<double>(m.size() - 1));
    }
    fv.at(FeatureKind::hw, slot) = hw;
    const auto n = history.crossings(slot_phase(planned, slot), time - params.fr_window, time);
    fv.at(FeatureKind::fr, slot) = static_cast<double>(n) * 3600.0 / params.fr_window;
  }
  return fv;
}

}  // namespace sigattack
