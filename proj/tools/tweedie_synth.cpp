// Synthetic dataset generator for demos and benchmarks.
//
//   conjugate  y = mu + e,        mu ~ N(0,1), e ~ N(0,1)
//   bimodal    y = mu + 0.5 t4,   mu ~ 0.7 N(-0.5,0.3^2) + 0.3 N(1.5,0.3^2)
//   t4         y ~ t4(loc, scale)

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"synthetic data generator"};
  std::string kind = "conjugate";
  std::string out_path = "synthetic.csv";
  std::size_t n = 100000;
  std::uint64_t seed = 42;
  double loc = 0.0, scale = 1.0;
  app.add_option("--kind", kind, "conjugate | bimodal | t4")
      ->check(CLI::IsMember({"conjugate", "bimodal", "t4"}));
  app.add_option("--n", n, "number of observations");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--loc", loc, "location for --kind t4");
  app.add_option("--scale", scale, "scale for --kind t4");
  app.add_option("--out", out_path, "output CSV path");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> t4(4.0);
  std::uniform_real_distribution<double> unif;

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
    return 1;
  }
  out << "value\n";
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (kind == "conjugate") {
      v = normal(rng) + normal(rng);
    } else if (kind == "bimodal") {
      const double mu = unif(rng) < 0.3 ? 1.5 + 0.3 * normal(rng) : -0.5 + 0.3 * normal(rng);
      v = mu + 0.5 * t4(rng);
    } else {
      v = loc + scale * t4(rng);
    }
    out << v << "\n";
  }
  std::printf("wrote %zu rows to %s\n", n, out_path.c_str());
  return 0;
}
