#pragma once
#include <filesystem>
#include <string>

#include "mui/random.hpp"
#include "mui/toy/toy_model.hpp"
#include "mui/trace/types.hpp"

namespace fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mui_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline mui::trace::Matrix random_matrix(mui::Rng& rng, std::uint32_t r, std::uint32_t c) {
  mui::trace::Matrix m(r, c);
  for (auto& x : m.data) x = static_cast<float>(rng.normal());
  return m;
}

inline mui::trace::ModelSnapshot random_snapshot(std::uint64_t seed, std::uint32_t L = 2, std::uint32_t d = 3,
                                                 std::uint32_t N = 4, std::uint32_t V = 5) {
  mui::Rng rng(seed);
  mui::trace::ModelSnapshot s;
  s.layers = L;
  s.d_model = d;
  s.ffn_width = N;
  s.vocab = V;
  for (std::uint32_t l = 0; l < L; ++l) {
    s.w_in.push_back(random_matrix(rng, N, d));
    s.w_out.push_back(random_matrix(rng, d, N));
  }
  s.w_unembed = random_matrix(rng, V, d);
  return s;
}

// A small architecture that keeps forward passes cheap in tests.
inline mui::toy::ToyConfig small_config(std::uint64_t seed = 7) {
  mui::toy::ToyConfig c;
  c.layers = 2;
  c.d_model = 16;
  c.heads = 2;
  c.ffn_width = 32;
  c.context = 64;
  c.seed = seed;
  return c;
}

// RAW trace with `tokens` response tokens per sample over layers 0..L-1.
inline mui::trace::TraceSet raw_trace(std::uint64_t seed, std::size_t samples, std::uint32_t L, std::uint32_t N,
                                      std::size_t tokens, std::uint32_t V = 259) {
  mui::Rng rng(seed);
  mui::trace::TraceSet t;
  t.model_id = "test-model";
  t.width = N;
  for (std::uint32_t l = 0; l < L; ++l) t.layers.push_back(l);
  for (std::size_t s = 0; s < samples; ++s) {
    mui::trace::SampleTrace st;
    st.sample.sample_id = "s" + std::to_string(s);
    st.sample.capability_tag = "math";
    st.sample.prompt_tokens = {256, 1, 2};
    for (std::size_t k = 0; k < tokens; ++k) st.sample.response_tokens.push_back(std::uint32_t(rng.below(V)));
    for (std::size_t k = 0; k < tokens; ++k)
      for (std::uint32_t l = 0; l < L; ++l) {
        mui::trace::TokenLayerRecord r;
        r.token_pos = std::uint32_t(k);
        r.layer = l;
        for (std::uint32_t i = 0; i < N; ++i) r.activations.push_back(static_cast<float>(rng.normal()));
        st.records.push_back(std::move(r));
      }
    t.samples.push_back(std::move(st));
  }
  return t;
}

}  // namespace fixture
