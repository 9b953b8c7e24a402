#pragma once

// Discrete mazes with deterministic four-action dynamics, rollouts under an
// arbitrary tabular policy, and trajectory import/export.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "odpp/error.hpp"
#include "odpp/linalg.hpp"
#include "odpp/random.hpp"
#include "odpp/spectral.hpp"

namespace odpp::grid {

enum class Action : int { up = 0, down = 1, left = 2, right = 3 };
inline constexpr int kActionCount = 4;
using ActionProbs = std::array<double, kActionCount>;

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// Rectangular maze. States are free cells numbered row-major; start, goal
/// and bottleneck lists are kept sorted by state.
class MazeSpec {
 public:
  MazeSpec() = default;
  MazeSpec(int width, int height, std::vector<bool> walls, std::vector<Cell> starts,
           std::vector<Cell> goals = {}, std::vector<Cell> bottlenecks = {})
      : width_(width), height_(height), walls_(std::move(walls)) {
    if (width < 1 || height < 1 || walls_.size() != static_cast<std::size_t>(width * height))
      fail(ErrorCode::invalid_argument, "maze wall mask does not match its dimensions");
    state_of_.assign(walls_.size(), -1);
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (!walls_[static_cast<std::size_t>(r * width_ + c)]) {
          state_of_[static_cast<std::size_t>(r * width_ + c)] = static_cast<int>(cells_.size());
          cells_.push_back({r, c});
        }
    if (cells_.empty()) fail(ErrorCode::invalid_argument, "maze has no free cell");
    starts_ = to_states(starts, "start");
    goals_ = to_states(goals, "goal");
    bottlenecks_ = to_states(bottlenecks, "bottleneck");
    if (starts_.empty()) fail(ErrorCode::invalid_argument, "maze has no start cell");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int state_count() const noexcept { return static_cast<int>(cells_.size()); }
  bool wall(int row, int col) const {
    return row < 0 || col < 0 || row >= height_ || col >= width_ ||
           walls_[static_cast<std::size_t>(row * width_ + col)];
  }
  /// Free-cell index at (row, col), or -1 for walls and out-of-bounds.
  int state_at(int row, int col) const {
    return wall(row, col) ? -1 : state_of_[static_cast<std::size_t>(row * width_ + col)];
  }
  Cell cell(int s) const {
    check_state(s);
    return cells_[static_cast<std::size_t>(s)];
  }
  const std::vector<int>& starts() const noexcept { return starts_; }
  const std::vector<int>& goals() const noexcept { return goals_; }
  const std::vector<int>& bottlenecks() const noexcept { return bottlenecks_; }

  /// Same layout with the goal list replaced.
  MazeSpec with_goals(const std::vector<Cell>& goals) const {
    auto cells_of = [this](const std::vector<int>& states) {
      std::vector<Cell> out;
      for (int s : states) out.push_back(cells_[static_cast<std::size_t>(s)]);
      return out;
    };
    return MazeSpec(width_, height_, walls_, cells_of(starts_), goals, cells_of(bottlenecks_));
  }

  void check_state(int s) const {
    if (s < 0 || s >= state_count())
      fail(ErrorCode::index_out_of_range, "state " + std::to_string(s) + " outside [0, " +
                                              std::to_string(state_count()) + ")");
  }

  bool operator==(const MazeSpec& o) const {
    return width_ == o.width_ && height_ == o.height_ && walls_ == o.walls_ && starts_ == o.starts_ &&
           goals_ == o.goals_ && bottlenecks_ == o.bottlenecks_;
  }

 private:
  std::vector<int> to_states(const std::vector<Cell>& cells, const char* what) const {
    std::vector<int> out;
    for (const auto& c : cells) {
      const int s = state_at(c.row, c.col);
      if (s < 0)
        fail(ErrorCode::invalid_argument, std::string(what) + " cell (" + std::to_string(c.row) + "," +
                                              std::to_string(c.col) + ") is not free");
      out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<bool> walls_;
  std::vector<int> state_of_;
  std::vector<Cell> cells_;
  std::vector<int> starts_;
  std::vector<int> goals_;
  std::vector<int> bottlenecks_;
};

inline int step(const MazeSpec& m, int s, Action a) {
  static constexpr int dr[kActionCount] = {-1, 1, 0, 0};
  static constexpr int dc[kActionCount] = {0, 0, -1, 1};
  const Cell c = m.cell(s);
  const int i = static_cast<int>(a);
  const int next = m.state_at(c.row + dr[i], c.col + dc[i]);
  return next < 0 ? s : next;
}

inline int step(const MazeSpec& m, int s, int a) {
  if (a < 0 || a >= kActionCount) fail(ErrorCode::index_out_of_range, "action " + std::to_string(a));
  return step(m, s, static_cast<Action>(a));
}

/// Every (s, a, s') of the maze, including blocked moves as self-transitions.
inline std::vector<spectral::Transition> exhaustive_transitions(const MazeSpec& m) {
  std::vector<spectral::Transition> out;
  out.reserve(static_cast<std::size_t>(m.state_count() * kActionCount));
  for (int s = 0; s < m.state_count(); ++s)
    for (int a = 0; a < kActionCount; ++a) out.push_back({s, a, step(m, s, a)});
  return out;
}

inline spectral::TransitionGraph maze_graph(const MazeSpec& m) {
  return spectral::build_graph(m.state_count(), exhaustive_transitions(m));
}

inline std::vector<spectral::StatePair> transition_pairs(const MazeSpec& m) {
  std::vector<spectral::StatePair> out;
  for (const auto& t : exhaustive_transitions(m)) out.emplace_back(t.state, t.next_state);
  return out;
}

// ---------------------------------------------------------------------------
// Layouts.

enum class MazeKind { four_room, corridor };

struct MazeParams {
  MazeKind kind = MazeKind::four_room;
  int width = 11;         // four_room: outer width including border
  int height = 11;        // four_room: outer height including border
  int length = 61;        // corridor: free cells along the corridor
  int chambers = 4;       // corridor: side chambers, alternating above and below
  int chamber_size = 3;   // corridor: side of each square chamber
};

namespace detail {

inline std::vector<bool> bordered(int w, int h) {
  std::vector<bool> walls(static_cast<std::size_t>(w * h), false);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (r == 0 || c == 0 || r == h - 1 || c == w - 1) walls[static_cast<std::size_t>(r * w + c)] = true;
  return walls;
}

inline MazeSpec four_room(int w, int h) {
  if (w < 5 || h < 5)
    fail(ErrorCode::invalid_argument, "four_room needs width and height >= 5, got " + std::to_string(w) +
                                          "x" + std::to_string(h));
  auto walls = bordered(w, h);
  const int wall_row = h / 2;
  const int wall_col = w / 2;
  for (int c = 0; c < w; ++c) walls[static_cast<std::size_t>(wall_row * w + c)] = true;
  for (int r = 0; r < h; ++r) walls[static_cast<std::size_t>(r * w + wall_col)] = true;
  // One doorway per wall segment, centred in the segment.
  const std::vector<Cell> doors{{(1 + wall_row - 1) / 2, wall_col},
                                {(wall_row + 1 + h - 2) / 2, wall_col},
                                {wall_row, (1 + wall_col - 1) / 2},
                                {wall_row, (wall_col + 1 + w - 2) / 2}};
  for (const auto& d : doors) walls[static_cast<std::size_t>(d.row * w + d.col)] = false;
  const Cell start{(1 + wall_row - 1) / 2, (1 + wall_col - 1) / 2};
  return MazeSpec(w, h, std::move(walls), {start}, {}, doors);
}

inline MazeSpec corridor(int length, int chambers, int size) {
  if (length < 3 || chambers < 0 || size < 1 || (chambers > 0 && length / chambers < size))
    fail(ErrorCode::invalid_argument, "corridor: chambers do not fit along the corridor");
  const int w = length + 2;
  const int h = 2 * size + 5;
  const int corridor_row = size + 2;
  std::vector<bool> walls(static_cast<std::size_t>(w * h), true);
  auto open = [&](int r, int c) { walls[static_cast<std::size_t>(r * w + c)] = false; };
  for (int c = 1; c <= length; ++c) open(corridor_row, c);
  std::vector<Cell> necks;
  for (int k = 0; k < chambers; ++k) {
    // Chamber centre at the middle of the k-th of `chambers` equal slots.
    const int centre = 1 + ((2 * k + 1) * length) / (2 * chambers);
    const int left = std::clamp(centre - size / 2, 1, length - size + 1);
    const bool above = k % 2 == 0;
    const int neck_row = above ? corridor_row - 1 : corridor_row + 1;
    const int first_row = above ? neck_row - size : neck_row + 1;
    open(neck_row, centre);
    necks.push_back({neck_row, centre});
    for (int r = first_row; r < first_row + size; ++r)
      for (int c = left; c < left + size; ++c) open(r, c);
  }
  const Cell start{corridor_row, 1 + (length - 1) / 2};
  return MazeSpec(w, h, std::move(walls), {start}, {}, std::move(necks));
}

}  // namespace detail

inline MazeSpec build_maze(const MazeParams& p) {
  return p.kind == MazeKind::four_room ? detail::four_room(p.width, p.height)
                                       : detail::corridor(p.length, p.chambers, p.chamber_size);
}

/// Grid text: '#' wall, '.' free, 'S' start, 'G' goal, 'B' bottleneck.
inline MazeSpec parse_maze(std::istream& is) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) fail(ErrorCode::parse_error, "maze text is empty");
  const int w = static_cast<int>(rows[0].size());
  const int h = static_cast<int>(rows.size());
  std::vector<bool> walls(static_cast<std::size_t>(w * h));
  std::vector<Cell> starts, goals, necks;
  for (int r = 0; r < h; ++r) {
    if (static_cast<int>(rows[r].size()) != w)
      fail(ErrorCode::parse_error, "maze row " + std::to_string(r) + " has inconsistent width");
    for (int c = 0; c < w; ++c) {
      const char ch = rows[r][c];
      switch (ch) {
        case '#': walls[static_cast<std::size_t>(r * w + c)] = true; break;
        case '.': break;
        case 'S': starts.push_back({r, c}); break;
        case 'G': goals.push_back({r, c}); break;
        case 'B': necks.push_back({r, c}); break;
        default: fail(ErrorCode::parse_error, std::string("unknown maze character '") + ch + "'");
      }
    }
  }
  return MazeSpec(w, h, std::move(walls), std::move(starts), std::move(goals), std::move(necks));
}

inline MazeSpec parse_maze(const std::string& text) {
  std::istringstream is(text);
  return parse_maze(is);
}

/// Inverse of parse_maze. A cell that is both start and goal prints as 'S'.
inline std::string format_maze(const MazeSpec& m) {
  std::string out;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) out += m.wall(r, c) ? '#' : '.';
    out += '\n';
  }
  auto mark = [&](const std::vector<int>& states, char ch) {
    for (int s : states) {
      const Cell c = m.cell(s);
      out[static_cast<std::size_t>(c.row * (m.width() + 1) + c.col)] = ch;
    }
  };
  mark(m.bottlenecks(), 'B');
  mark(m.goals(), 'G');
  mark(m.starts(), 'S');
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories.

struct TrajectoryRecord {
  int option = 0;
  std::vector<int> states;   // length T + 1
  std::vector<int> actions;  // length T
  std::vector<double> logprobs;
  std::vector<int> landmarks;  // indices into `states`, filled by the trainer
  Vector feature;              // trajectory feature, filled by the trainer

  int horizon() const noexcept { return static_cast<int>(actions.size()); }
  int start() const { return states.front(); }
  int final_state() const { return states.back(); }
};

/// Samples T actions from `policy(state, option)`, which must return a
/// probability vector over the four actions.
template <class Policy>
TrajectoryRecord rollout(const MazeSpec& m, int s0, Policy&& policy, int option, int horizon, Rng& rng) {
  if (horizon < 1) fail(ErrorCode::invalid_argument, "rollout horizon must be >= 1");
  m.check_state(s0);
  TrajectoryRecord rec;
  rec.option = option;
  rec.states.reserve(static_cast<std::size_t>(horizon) + 1);
  rec.actions.reserve(static_cast<std::size_t>(horizon));
  rec.logprobs.reserve(static_cast<std::size_t>(horizon));
  rec.states.push_back(s0);
  int s = s0;
  for (int t = 0; t < horizon; ++t) {
    const ActionProbs p = policy(s, option);
    double total = 0.0;
    for (double x : p) {
      if (!std::isfinite(x) || x < 0.0)
        fail(ErrorCode::non_finite, "policy returned an invalid probability at state " + std::to_string(s));
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorCode::not_normalized, "policy probabilities do not sum to 1");
    const auto a = static_cast<int>(rng.categorical(p));
    s = step(m, s, a);
    rec.actions.push_back(a);
    rec.logprobs.push_back(std::log(p[static_cast<std::size_t>(a)]));
    rec.states.push_back(s);
  }
  return rec;
}

inline ActionProbs uniform_action_probs() { return {0.25, 0.25, 0.25, 0.25}; }

/// log Unif(tau | s0) = T log(1/|A|).
inline double random_walk_logprob(const TrajectoryRecord& rec) {
  return -static_cast<double>(rec.horizon()) * std::log(static_cast<double>(kActionCount));
}

/// One JSON object per line: {"option", "states": [[x, y], ...], "actions",
/// "logprobs"}, with x the column and y the row of each visited cell.
inline void write_trajectories(std::ostream& os, const MazeSpec& m, const std::vector<TrajectoryRecord>& recs) {
  for (const auto& r : recs) {
    nlohmann::json j;
    j["option"] = r.option;
    auto xy = nlohmann::json::array();
    for (int s : r.states) {
      const Cell c = m.cell(s);
      xy.push_back({c.col, c.row});
    }
    j["states"] = std::move(xy);
    j["actions"] = r.actions;
    j["logprobs"] = r.logprobs;
    os << j.dump() << '\n';
  }
}

inline std::vector<TrajectoryRecord> read_trajectories(std::istream& is, const MazeSpec& m) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrajectoryRecord r;
      r.option = j.at("option").get<int>();
      for (const auto& p : j.at("states")) {
        const int s = m.state_at(p.at(1).get<int>(), p.at(0).get<int>());
        if (s < 0) fail(ErrorCode::invalid_argument, "trajectory visits a wall cell");
        r.states.push_back(s);
      }
      r.actions = j.at("actions").get<std::vector<int>>();
      r.logprobs = j.at("logprobs").get<std::vector<double>>();
      if (r.states.size() != r.actions.size() + 1 || r.logprobs.size() != r.actions.size())
        fail(ErrorCode::invalid_argument, "trajectory lengths are inconsistent");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, "trajectory line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), "trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace odpp::grid
