#include "sigattack/microsim.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace sigattack {

ArrivalProcess::ArrivalProcess(const std::array<double, 8>& rates_vph, std::uint64_t seed, int sim_hz)
    : sim_hz_(sim_hz) {
  for (int m = 0; m < 8; ++m) {
    if (rates_vph[m] <= 0.0) continue;
    Stream s{Rng(derive_seed(seed, static_cast<std::uint64_t>(m + 1))), 3600.0 / rates_vph[m], 0.0};
    s.next = s.rng.exponential(s.mean_gap);
    streams_[m] = std::move(s);
  }
}

std::vector<int> ArrivalProcess::arrivals_at(Tick t) {
  std::vector<int> out;
  for (int m = 0; m < 8; ++m) {
    auto& s = streams_[m];
    if (!s) continue;
    // An arrival at continuous time a belongs to the first tick t with t >= a * hz.
    while (s->next * sim_hz_ <= static_cast<double>(t)) {
      out.push_back(m);
      s->next += s->rng.exponential(s->mean_gap);
    }
  }
  return out;
}

double total_delay(std::span<const Vehicle> vehicles, double horizon, double approach_length,
                   double free_flow_speed) {
  double sum = 0.0;
  for (const auto& v : vehicles) {
    if (v.exit_time) {
      sum += *v.exit_time - v.entry_time - v.free_flow_travel_time;
    } else {
      sum += (horizon - v.entry_time) - (approach_length - v.position) / free_flow_speed;
    }
  }
  return sum;
}

World::World(const ScenarioConfig& config, std::uint64_t seed)
    : config_(config), arrivals_(config.demand_vph, seed, config.sim_hz) {}

double World::follow_speed(double gap) const {
  const double v = config_.wave_speed * (gap - config_.jam_spacing) / config_.jam_spacing;
  return std::clamp(v, 0.0, config_.free_flow_speed);
}

void World::spawn_pending(int lane) {
  auto& queue = pending_[lane];
  if (queue.empty()) return;
  auto& road = lanes_[lane];
  if (!road.empty() && road.back().position > config_.approach_length - config_.jam_spacing) return;
  Vehicle v = queue.front();
  queue.pop_front();
  v.position = config_.approach_length;
  v.speed = road.empty() ? config_.free_flow_speed : follow_speed(v.position - road.back().position);
  road.push_back(v);
}

void World::place(PhaseId movement, double position, double speed) {
  Vehicle v;
  v.id = next_id_++;
  v.movement = movement;
  v.position = position;
  v.speed = std::clamp(speed, 0.0, config_.free_flow_speed);
  v.entry_time = time();
  v.free_flow_travel_time = config_.approach_length / config_.free_flow_speed;
  auto& road = lanes_[movement.index()];
  const auto at = std::lower_bound(road.begin(), road.end(), position,
                                   [](const Vehicle& a, double x) { return a.position < x; });
  road.insert(at, v);
  ++spawned_;
}

void World::step(const std::array<SignalState, 8>& signals) {
  const double dt = config_.dt();
  const double now = time();
  const double free_spacing =
      config_.jam_spacing * (1.0 + config_.free_flow_speed / config_.wave_speed);

  for (int m : arrivals_.arrivals_at(tick_)) {
    Vehicle v;
    v.id = next_id_++;
    v.movement = PhaseId{m + 1};
    v.position = config_.approach_length;
    v.speed = config_.free_flow_speed;
    v.entry_time = now;
    v.free_flow_travel_time = config_.approach_length / config_.free_flow_speed;
    pending_[m].push_back(v);
    ++spawned_;
    arrival_hash_.update_value(tick_);
    arrival_hash_.update_value(m);
    arrival_hash_.update_value(v.id);
  }

  for (int lane = 0; lane < 8; ++lane) {
    spawn_pending(lane);
    auto& road = lanes_[lane];
    const bool green = signals[lane] == SignalState::green;

    // Synchronous update: every speed is computed from positions at the start of the tick.
    std::vector<double> speeds(road.size());
    for (std::size_t i = 0; i < road.size(); ++i) {
      const double x = road[i].position;
      double v = config_.free_flow_speed;
      if (i > 0) {
        v = std::min(v, follow_speed(x - road[i - 1].position));
      } else if (ghost_[lane]) {
        v = std::min(v, follow_speed(x - *ghost_[lane]));
      }
      if (!green) v = std::min(v, follow_speed(x + config_.jam_spacing));
      speeds[i] = v;
    }

    if (ghost_[lane]) {
      *ghost_[lane] -= config_.free_flow_speed * dt;
      if (-*ghost_[lane] >= free_spacing) ghost_[lane].reset();
    }

    for (std::size_t i = 0; i < road.size(); ++i) {
      road[i].speed = speeds[i];
      road[i].position -= speeds[i] * dt;
    }

    while (!road.empty() && road.front().position < 0.0) {
      if (!green) throw ConsistencyFault(fmt::format("vehicle {} crossed on red", road.front().id));
      Vehicle v = road.front();
      road.pop_front();
      const double before = v.position + v.speed * dt;
      v.exit_time = now + before / v.speed;
      ghost_[lane] = v.position;
      v.position = 0.0;
      departed_.push_back(v);
    }

    for (std::size_t i = 1; i < road.size(); ++i) {
      if (road[i].position - road[i - 1].position < config_.jam_spacing - 1e-9) {
        throw ConsistencyFault(fmt::format("vehicles {} and {} overlap on movement {}",
                                           road[i - 1].id, road[i].id, lane + 1));
      }
    }
  }
  ++tick_;
}

std::size_t World::in_network() const {
  std::size_t n = 0;
  for (int lane = 0; lane < 8; ++lane) n += lanes_[lane].size() + pending_[lane].size();
  return n;
}

std::vector<Vehicle> World::active() const {
  std::vector<Vehicle> out;
  for (int lane = 0; lane < 8; ++lane) {
    out.insert(out.end(), lanes_[lane].begin(), lanes_[lane].end());
    out.insert(out.end(), pending_[lane].begin(), pending_[lane].end());
  }
  return out;
}

std::vector<BsmRecord> World::emit_bsms() const {
  std::vector<BsmRecord> out;
  for (const auto& road : lanes_) {
    for (const auto& v : road) {
      if (v.position > config_.comm_range) break;
      out.push_back({v.id, tick_, v.position, v.speed, v.movement, false});
    }
  }
  return out;
}

std::vector<BsmRecord> World::trajectory_records() const {
  std::vector<BsmRecord> out;
  for (const auto& road : lanes_)
    for (const auto& v : road) out.push_back({v.id, tick_, v.position, v.speed, v.movement, false});
  return out;
}

double World::total_delay() const {
  std::vector<Vehicle> all = departed_;
  const auto live = active();
  all.insert(all.end(), live.begin(), live.end());
  return sigattack::total_delay(all, time(), config_.approach_length, config_.free_flow_speed);
}

}  // namespace sigattack
