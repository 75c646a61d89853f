#pragma once

// Scripted-backend fixtures shared by the unit tests and the acceptance suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tick/backends.hpp"
#include "tick/error.hpp"
#include "tick/gateway.hpp"
#include "tick/text_util.hpp"
#include "tick/types.hpp"

namespace tick::testing {

/// Builds a script for ScriptedBackend rule by rule.
class Script {
 public:
  Script& on(std::vector<std::string> contains, std::vector<std::string> responses) {
    rules_.push_back({{"contains", std::move(contains)}, {"responses", std::move(responses)}});
    return *this;
  }
  Script& exact(const std::string& prompt, std::vector<std::string> responses) {
    rules_.push_back({{"prompt_sha256", sha256_hex(prompt)}, {"responses", std::move(responses)}});
    return *this;
  }
  /// Checklist generation for one instruction.
  Script& checklist(const std::string& instruction_text, const std::vector<std::string>& questions) {
    std::string answer = "Analysis: The instruction has several requirements.\nAnswer: ";
    for (std::size_t i = 0; i < questions.size(); ++i) answer += (i ? "\n- " : "- ") + questions[i];
    return on({"evaluation checklist", "### INSTRUCTION\n" + instruction_text + "\n"}, {answer});
  }
  /// One judge verdict for (response, question).
  Script& verdict(const std::string& response, const std::string& question, bool yes) {
    return on({"**Generated Text**\n" + response + "\n", "**Question**\n" + question + "\n"},
              {std::string("Analysis: Checked the requirement.\nAnswer: ") + (yes ? "YES" : "NO")});
  }

  nlohmann::json json() const { return {{"rules", rules_}}; }
  std::shared_ptr<ScriptedBackend> backend() const { return ScriptedBackend::from_json(json()); }
  std::size_t size() const { return rules_.size(); }

 private:
  nlohmann::json rules_ = nlohmann::json::array();
};

/// Code of the tick::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline GatewayOptions fast_options() {
  GatewayOptions o;
  o.initial_backoff = std::chrono::milliseconds(1);
  return o;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / fmt::format("tick-test-{:016x}", rng());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Self-refinement fixture: ten instructions whose drafts pass a growing number
// of checklist questions.
// ---------------------------------------------------------------------------

struct RefineCase {
  Instruction instruction;
  std::vector<std::string> questions;
  /// passes[t] = YES answers for draft t.
  std::vector<int> passes;
  /// Draft index whose refinement output is unparseable, or -1.
  int broken_refinement = -1;
};

inline std::string draft(std::size_t item, int t) { return fmt::format("[task-{:02} draft-{}]", item, t); }

inline std::vector<RefineCase> refine_cases(int max_iters = 4) {
  std::vector<RefineCase> cases;
  for (std::size_t i = 0; i < 10; ++i) {
    RefineCase c;
    c.instruction.id = fmt::format("task-{:02}", i);
    c.instruction.text = fmt::format("Task {:02}: write a short note about topic {:02}.", i, i);
    const int m = 2 + static_cast<int>(i % 3);
    for (int j = 0; j < m; ++j) {
      c.questions.push_back(fmt::format("Does the note meet requirement {} of task {:02}?", j + 1, i));
    }
    const int start = static_cast<int>(i % 3) % m;
    for (int t = 0; t <= max_iters; ++t) {
      int p = std::min(m, start + t);
      if (i == 9) p = std::min(m - 1, start + t);  // never fully passes
      c.passes.push_back(p);
    }
    if (i == 8) c.broken_refinement = 1;
    cases.push_back(std::move(c));
  }
  return cases;
}

inline Script refine_script(const std::vector<RefineCase>& cases) {
  Script s;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    s.exact(c.instruction.text, {draft(i, 0)});
    s.checklist(c.instruction.text, c.questions);
    for (std::size_t t = 0; t < c.passes.size(); ++t) {
      for (std::size_t j = 0; j < c.questions.size(); ++j) {
        s.verdict(draft(i, static_cast<int>(t)), c.questions[j], static_cast<int>(j) < c.passes[t]);
      }
      const std::string marker = "**RESPONSE**\n" + draft(i, static_cast<int>(t)) + "\n";
      if (static_cast<int>(t) == c.broken_refinement) {
        s.on({"FEEDBACK: A list", marker}, {"I would improve it but forgot the format."});
      } else {
        s.on({"FEEDBACK: A list", marker},
             {"Plan: Address the failed requirements.\nAnswer: " + draft(i, static_cast<int>(t) + 1)});
      }
    }
  }
  return s;
}

/// Expected number of responses in a trace and its final draft index.
inline int expected_last_draft(const RefineCase& c, int max_iters) {
  const int m = static_cast<int>(c.questions.size());
  for (int t = 0; t <= max_iters; ++t) {
    if (c.passes[t] == m) return t;
    if (t == max_iters) return t;
    if (t == c.broken_refinement) return t;
  }
  return max_iters;
}

// ---------------------------------------------------------------------------
// Best-of-N fixture: candidate pools with scripted checklist pass counts and
// independent true scores.
// ---------------------------------------------------------------------------

struct Pool {
  Instruction instruction;
  std::vector<std::string> questions;
  std::vector<int> passes;         ///< per candidate, out of questions.size()
  std::vector<double> true_scores;  ///< per candidate
};

inline std::string candidate(std::size_t pool, std::size_t c) { return fmt::format("[pool-{:02} cand-{}]", pool, c); }

inline std::vector<Pool> bestofn_pools(std::size_t count = 20, std::size_t n = 8, std::uint32_t seed = 7) {
  std::mt19937 rng(seed);
  std::vector<Pool> pools;
  for (std::size_t p = 0; p < count; ++p) {
    Pool pool;
    pool.instruction.id = fmt::format("pool-{:02}", p);
    pool.instruction.text = fmt::format("Pool {:02}: answer the question about subject {:02}.", p, p);
    for (int j = 0; j < 4; ++j) pool.questions.push_back(fmt::format("Does it cover point {} of pool {:02}?", j + 1, p));
    for (std::size_t c = 0; c < n; ++c) {
      pool.passes.push_back(static_cast<int>(rng() % 5));
      pool.true_scores.push_back(static_cast<double>(rng() % 4));
    }
    if (p == 0) {
      // Every candidate ties under both scorers.
      std::fill(pool.passes.begin(), pool.passes.end(), 2);
      std::fill(pool.true_scores.begin(), pool.true_scores.end(), 1.0);
    } else if (p == 1) {
      // The checklist favours candidates that are not truly best.
      pool.passes = {4, 4, 1, 0, 2, 3, 1, 0};
      pool.true_scores = {0, 1, 3, 3, 2, 0, 1, 2};
    } else if (p == 2) {
      // A single winner under both scorers.
      pool.passes = {1, 2, 3, 4, 3, 2, 1, 0};
      pool.true_scores = {0, 1, 2, 3, 2, 1, 0, 0};
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

inline Script bestofn_script(const std::vector<Pool>& pools) {
  Script s;
  for (std::size_t p = 0; p < pools.size(); ++p) {
    const auto& pool = pools[p];
    std::vector<std::string> candidates;
    for (std::size_t c = 0; c < pool.passes.size(); ++c) candidates.push_back(candidate(p, c));
    s.exact(pool.instruction.text, candidates);
    s.checklist(pool.instruction.text, pool.questions);
    for (std::size_t c = 0; c < pool.passes.size(); ++c) {
      for (std::size_t j = 0; j < pool.questions.size(); ++j) {
        s.verdict(candidate(p, c), pool.questions[j], static_cast<int>(j) < pool.passes[c]);
      }
    }
  }
  return s;
}

}  // namespace tick::testing
