#include "semnet/semantics.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "semnet/errors.hpp"
#include "semnet/rng.hpp"

namespace semnet {

bool FeasibleSets::contains(std::size_t i, std::size_t j) const {
  return std::binary_search(sets[i].begin(), sets[i].end(), j);
}

namespace {

// Partial Fisher-Yates over {1..k}; returns a sorted subset of size `count`.
std::vector<int> random_subset(std::mt19937_64& gen, int k, int count) {
  std::vector<int> pool(static_cast<std::size_t>(k));
  std::iota(pool.begin(), pool.end(), 1);
  for (int a = 0; a < count; ++a) {
    const auto span = static_cast<std::uint64_t>(k - a);
    const auto pick = a + static_cast<int>(gen() % span);
    std::swap(pool[static_cast<std::size_t>(a)], pool[static_cast<std::size_t>(pick)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t overlap(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

}  // namespace

KnowledgeModel assign_knowledge(int num_domains, int kb_per_bs, int needs_per_mu,
                                const Topology& topology, std::uint64_t seed) {
  if (num_domains < 1) throw ConfigError("num_domains must be >= 1");
  if (kb_per_bs < 1 || kb_per_bs > num_domains) {
    throw ConfigError("kb_per_bs must lie in [1, num_domains]");
  }
  if (needs_per_mu < 1 || needs_per_mu > num_domains) {
    throw ConfigError("needs_per_mu must lie in [1, num_domains]");
  }
  KnowledgeModel model;
  model.num_domains = num_domains;
  auto bs_gen = make_stream(seed, Stream::kBsKnowledge);
  for (std::size_t j = 0; j < topology.num_bs(); ++j) {
    model.bs_kbs.push_back(random_subset(bs_gen, num_domains, kb_per_bs));
  }
  auto mu_gen = make_stream(seed, Stream::kMuKnowledge);
  for (std::size_t i = 0; i < topology.num_mu(); ++i) {
    model.mu_needs.push_back(random_subset(mu_gen, num_domains, needs_per_mu));
  }
  return model;
}

FeasibleSets feasible_bs_sets(const KnowledgeModel& model) {
  FeasibleSets fs;
  fs.sets.resize(model.mu_needs.size());
  for (std::size_t i = 0; i < model.mu_needs.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < model.bs_kbs.size(); ++j) {
      const std::size_t o = overlap(model.bs_kbs[j], model.mu_needs[i]);
      if (o > best) {
        best = o;
        fs.sets[i].clear();
      }
      if (o == best) fs.sets[i].push_back(j);
    }
  }
  return fs;
}

FeasibleSets all_feasible(std::size_t num_mu, std::size_t num_bs) {
  FeasibleSets fs;
  std::vector<std::size_t> all(num_bs);
  std::iota(all.begin(), all.end(), std::size_t{0});
  fs.sets.assign(num_mu, all);
  return fs;
}

B2mProfile uniform_b2m(std::size_t num_mu, double kappa) {
  if (!(kappa > 0.0)) throw ConfigError("b2m kappa must be > 0");
  return {std::vector<double>(num_mu, kappa)};
}

double b2m_rate(const B2mProfile& profile, std::size_t i, double bits_per_s) {
  if (bits_per_s < 0.0) throw std::domain_error("b2m_rate: negative bit-rate");
  return profile.kappa.at(i) * bits_per_s;
}

double matched_rate(const B2mProfile& profile, std::size_t i, double eta, double bits_per_s) {
  return eta * b2m_rate(profile, i, bits_per_s);
}

void validate(const EtaModel& model) {
  if (!(model.tau > 0.0 && model.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(model.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
}

EtaSample sample_eta(const EtaModel& model, std::size_t num_mu, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(model.tau, model.sigma);
  EtaSample out;
  out.eta.resize(num_mu);
  for (auto& e : out.eta) {
    const double draw = model.sigma > 0.0 ? normal(gen) : model.tau;
    e = std::clamp(draw, kEtaClampEps, 1.0 - kEtaClampEps);
    if (e != draw) ++out.clamped;
  }
  return out;
}

EtaSample sample_eta(const EtaModel& model, std::size_t num_mu, std::uint64_t seed) {
  auto gen = make_stream(seed, Stream::kEta);
  return sample_eta(model, num_mu, gen);
}

void to_json(nlohmann::json& j, const KnowledgeModel& model) {
  j = {{"num_domains", model.num_domains},
       {"bs_kbs", model.bs_kbs},
       {"mu_needs", model.mu_needs}};
}

void from_json(const nlohmann::json& j, KnowledgeModel& model) {
  model.num_domains = j.at("num_domains").get<int>();
  model.bs_kbs = j.at("bs_kbs").get<std::vector<std::vector<int>>>();
  model.mu_needs = j.at("mu_needs").get<std::vector<std::vector<int>>>();
  for (auto& s : model.bs_kbs) std::sort(s.begin(), s.end());
  for (auto& s : model.mu_needs) {
    if (s.empty()) throw ConfigError("every user needs at least one knowledge domain");
    std::sort(s.begin(), s.end());
  }
}

void to_json(nlohmann::json& j, const B2mProfile& profile) { j = {{"kappa", profile.kappa}}; }

void from_json(const nlohmann::json& j, B2mProfile& profile) {
  profile.kappa = j.at("kappa").get<std::vector<double>>();
  for (double k : profile.kappa) {
    if (!(k > 0.0)) throw ConfigError("b2m kappa must be > 0");
  }
}

}  // namespace semnet
