#include "pianomime/piano_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pianomime {

PianoStateTrajectory discretize(const std::vector<NoteEvent>& events,
                                const std::vector<PedalEvent>& pedal,
                                double rate_hz, int tail_frames) {
  if (rate_hz <= 0.0) throw std::invalid_argument("discretize: rate_hz must be positive");
  if (tail_frames < 0) throw std::invalid_argument("discretize: tail_frames must be >= 0");

  double last = 0.0;
  for (const auto& e : events) {
    if (e.key < 0 || e.key >= kNumKeys)
      throw std::invalid_argument("discretize: key index out of range");
    if (e.off < e.on) throw std::invalid_argument("discretize: note off precedes note on");
    last = std::max(last, e.off);
  }
  for (const auto& p : pedal) last = std::max(last, p.t);

  const std::size_t frames =
      static_cast<std::size_t>(std::floor(last * rate_hz)) + 1 + static_cast<std::size_t>(tail_frames);

  PianoStateTrajectory traj;
  traj.rate_hz = rate_hz;
  traj.frames.resize(frames);

  for (const auto& e : events) {
    // First frame with t >= on, last frame with t < off.
    const auto first = static_cast<std::size_t>(std::ceil(e.on * rate_hz - 1e-9));
    for (std::size_t i = first; i < frames; ++i) {
      const double t = static_cast<double>(i) / rate_hz;
      if (t >= e.off) break;
      traj.frames[i].keys[static_cast<std::size_t>(e.key)] = 1;
    }
  }

  std::vector<PedalEvent> ped(pedal);
  std::stable_sort(ped.begin(), ped.end(),
                   [](const PedalEvent& a, const PedalEvent& b) { return a.t < b.t; });
  std::size_t pi = 0;
  bool down = false;
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    while (pi < ped.size() && ped[pi].t <= t + 1e-12) down = ped[pi++].down;
    traj.frames[i].pedal = down ? 1 : 0;
  }
  return traj;
}

std::vector<PianoState> goal_window(const PianoStateTrajectory& traj,
                                    long t, int length) {
  if (length < 0) throw std::invalid_argument("goal_window: length must be >= 0");
  if (t < -1) throw std::invalid_argument("goal_window: t must be >= -1");
  std::vector<PianoState> win(static_cast<std::size_t>(length));
  for (int k = 0; k < length; ++k) {
    const long idx = t + 1 + k;
    if (idx >= 0 && idx < static_cast<long>(traj.frames.size()))
      win[static_cast<std::size_t>(k)] = traj.frames[static_cast<std::size_t>(idx)];
  }
  return win;
}

void write_trajectory_csv(const std::string& path, const PianoStateTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# rate_hz=%.6f\n", traj.rate_hz);
  out << buf;
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", traj.time_of(i));
    out << buf;
    for (int k = 0; k < kNumKeys; ++k) out << ',' << int(traj.frames[i].keys[static_cast<std::size_t>(k)]);
    out << ',' << int(traj.frames[i].pedal) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PianoStateTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  PianoStateTrajectory traj;
  traj.rate_hz = 0.0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("rate_hz=");
      if (pos != std::string::npos) traj.rate_hz = std::stod(line.substr(pos + 8));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != std::size_t(kNumKeys) + 2)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(kNumKeys + 2) + " columns, got " +
                               std::to_string(cells.size()));
    PianoState s;
    for (int k = 0; k < kNumKeys; ++k) {
      const int v = std::stoi(cells[static_cast<std::size_t>(k) + 1]);
      if (v != 0 && v != 1)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": key flag must be 0 or 1");
      s.keys[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(v);
    }
    const int p = std::stoi(cells.back());
    if (p != 0 && p != 1)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": pedal flag must be 0 or 1");
    s.pedal = static_cast<std::uint8_t>(p);
    traj.frames.push_back(s);
  }
  if (traj.rate_hz <= 0.0)
    throw std::runtime_error(path + ": missing or invalid '# rate_hz=' header");
  return traj;
}

void write_trajectory_json(const std::string& path, const PianoStateTrajectory& traj) {
  nlohmann::json j;
  j["rate_hz"] = traj.rate_hz;
  auto& frames = j["frames"] = nlohmann::json::array();
  for (const auto& f : traj.frames) {
    nlohmann::json jf;
    auto& on = jf["on"] = nlohmann::json::array();
    for (int k = 0; k < kNumKeys; ++k)
      if (f.keys[static_cast<std::size_t>(k)]) on.push_back(k);
    jf["pedal"] = int(f.pedal);
    frames.push_back(std::move(jf));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

PianoStateTrajectory read_trajectory_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  PianoStateTrajectory traj;
  traj.rate_hz = j.at("rate_hz").get<double>();
  if (traj.rate_hz <= 0.0) throw std::runtime_error(path + ": rate_hz must be positive");
  for (const auto& jf : j.at("frames")) {
    PianoState s;
    for (const auto& k : jf.at("on")) {
      const int idx = k.get<int>();
      if (idx < 0 || idx >= kNumKeys) throw std::runtime_error(path + ": key index out of range");
      s.keys[static_cast<std::size_t>(idx)] = 1;
    }
    s.pedal = jf.at("pedal").get<int>() ? 1 : 0;
    traj.frames.push_back(s);
  }
  return traj;
}

}  // namespace pianomime
