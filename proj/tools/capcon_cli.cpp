// Command-line front end. Talks to the solver only through capcon.h.

#include <capcon/capcon.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kInvalid = 2, kUnsupported = 3, kNumerical = 4 };

int exit_code(capcon_status s) {
  switch (s) {
    case CAPCON_OK: return kOk;
    case CAPCON_ERR_INVALID_ARGUMENT:
    case CAPCON_ERR_INVALID_PARAMETER:
    case CAPCON_ERR_ILL_POSED:
    case CAPCON_ERR_DOMAIN:
    case CAPCON_ERR_EXTRAPOLATION:
    case CAPCON_ERR_IO:
      return kInvalid;
    case CAPCON_ERR_UNSUPPORTED:
    case CAPCON_ERR_REGIME:
      return kUnsupported;
    default:
      return kNumerical;
  }
}

struct Failure {
  int code;
};

void check(capcon_status s) {
  if (s == CAPCON_OK) return;
  std::cerr << "capcon: " << capcon_last_error()
            << "\n";
  throw Failure{exit_code(s)};
}

struct ModelDeleter {
  void operator()(capcon_model* m) const { capcon_model_free(m); }
};
struct SolutionDeleter {
  void operator()(capcon_solution* s) const { capcon_solution_free(s); }
};
struct StringDeleter {
  void operator()(char* s) const { capcon_string_free(s); }
};
using ModelPtr = std::unique_ptr<capcon_model, ModelDeleter>;
using SolutionPtr = std::unique_ptr<capcon_solution, SolutionDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

ModelPtr load(const std::string& path) {
  capcon_model* m = nullptr;
  check(capcon_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

SolutionPtr solve(const capcon_model* m, double tol) {
  capcon_solution* s = nullptr;
  check(capcon_solve(m, tol, &s));
  return SolutionPtr(s);
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Output files stay byte-identical across runs; wall-clock data and the
// thread count go next to them in <out>.manifest.json.
class Output {
 public:
  explicit Output(std::string path) : path_(std::move(path)), started_(iso_now()) {}

  void write(const std::string& text, int threads = 0) const {
    if (path_.empty() || path_ == "-") {
      std::cout << text;
      return;
    }
    write_file(path_, text);
    nlohmann::json side{{"output", path_},
                        {"tool_version", capcon_version()},
                        {"started", started_},
                        {"finished", iso_now()}};
    if (threads > 0) side["threads"] = threads;
    write_file(path_ + ".manifest.json", side.dump(2) + "\n");
  }

  static void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
      std::cerr << "capcon: IO: cannot write " << path << "\n";
      throw Failure{kInvalid};
    }
  }

 private:
  std::string path_;
  std::string started_;
};

int env_threads() {
  if (const char* v = std::getenv("CAPCON_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*v && !*end && n >= 1 && n <= 4096) return static_cast<int>(n);
    std::cerr << "capcon: ignoring CAPCON_THREADS='" << v << "'\n";
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal consumption and investment with a linear consumption cap"};
  app.set_version_flag("--version", std::string(capcon_version()));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  double tol = 0.0;

  auto* solve_cmd = app.add_subcommand("solve", "Locate the free boundary and print the solution JSON");
  solve_cmd->add_option("config", config, "Parameter file (JSON)")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--tol", tol, "Bisection tolerance relative to the bracket width")->check(CLI::Range(0.0, 0.5));
  solve_cmd->add_option("--out", out, "Output file (default stdout)");

  double xmin = 0.0, xmax = 0.0;
  int points = 200;
  std::string format = "csv";
  bool linear = false;
  auto* table_cmd = app.add_subcommand("table", "Tabulate V, its derivatives and the policy");
  table_cmd->add_option("config", config, "Parameter file (JSON)")->required()->check(CLI::ExistingFile);
  table_cmd->add_option("--xmin", xmin, "Smallest wealth (default: x*/20, or 0.05)");
  table_cmd->add_option("--xmax", xmax, "Largest wealth (default: 20 x*, or 100)");
  table_cmd->add_option("--points", points, "Number of rows")->check(CLI::PositiveNumber);
  table_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  table_cmd->add_flag("--linear", linear, "Linear rather than log spacing");
  table_cmd->add_option("--tol", tol, "Bisection tolerance")->check(CLI::Range(0.0, 0.5));
  table_cmd->add_option("--out", out, "Output file (default stdout)");

  double x0 = 1.0, dt = 1e-3, horizon = 0.0;
  long long paths = 200000;
  unsigned long long seed = 1;
  std::string policy = "optimal";
  std::string quantiles;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the discounted utility of a policy");
  sim_cmd->add_option("config", config, "Parameter file (JSON)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--x0", x0, "Initial wealth")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dt", dt, "Time step")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--horizon", horizon, "Horizon T (default: max(200, ln(1e8)/beta))")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", seed, "Random seed");
  sim_cmd->add_option("--policy", policy, "optimal, merton, zero, scaled:<f>, pi:<f>, or a comma list");
  sim_cmd->add_option("--quantiles", quantiles, "Write per-path quantiles CSV here");
  sim_cmd->add_option("--out", out, "Output file (default stdout)");

  double corrupt = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite; exit 1 if any check fails");
  verify_cmd->add_option("config", config, "Parameter file (JSON)")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--corrupt-xstar", corrupt, "Shift the solved boundary by this relative amount first");
  verify_cmd->add_option("--out", out, "Report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInvalid;
  }

  const std::string cmd = command_line(argc, argv);
  const Output output(out);

  try {
    if (*solve_cmd) {
      ModelPtr m = load(config);
      SolutionPtr s = solve(m.get(), tol);
      char* j = nullptr;
      check(capcon_solution_json(s.get(), cmd.c_str(), &j));
      StringPtr text(j);
      output.write(text.get());
      return kOk;
    }

    if (*table_cmd) {
      ModelPtr m = load(config);
      SolutionPtr s = solve(m.get(), tol);
      double xs = 0.0;
      check(capcon_solution_x_star(s.get(), &xs));
      const bool interior = std::isfinite(xs) && xs > 0;
      if (table_cmd->count("--xmin") == 0) xmin = interior ? xs / 20 : 0.05;
      if (table_cmd->count("--xmax") == 0) xmax = interior ? 20 * xs : 100.0;
      char* t = nullptr;
      check(capcon_table(s.get(), xmin, xmax, points, linear ? 0 : 1,
                         format == "json" ? 1 : 0, cmd.c_str(), &t));
      StringPtr text(t);
      output.write(text.get());
      return kOk;
    }

    if (*sim_cmd) {
      ModelPtr m = load(config);
      if (horizon <= 0) {
        char* mj = nullptr;
        check(capcon_model_json(m.get(), &mj));
        StringPtr doc(mj);
        const double beta = nlohmann::json::parse(doc.get())["params"]["beta"].get<double>();
        horizon = std::max(200.0, std::log(1e8) / beta);
      }
      SolutionPtr s = solve(m.get(), 0.0);
      const int threads = env_threads();
      const capcon_sim_config cfg{x0, dt, horizon, paths, seed, threads};
      char* j = nullptr;
      char* q = nullptr;
      const capcon_status st = capcon_simulate(s.get(), &cfg, policy.c_str(), cmd.c_str(), &j,
                                               quantiles.empty() ? nullptr : &q);
      StringPtr text(j), qtext(q);
      check(st);
      if (!quantiles.empty()) Output::write_file(quantiles, qtext.get());
      output.write(text.get(), threads);
      return kOk;
    }

    if (*verify_cmd) {
      ModelPtr m = load(config);
      char* r = nullptr;
      int passed = 0;
      check(capcon_verify(m.get(), corrupt, cmd.c_str(), &r, &passed));
      StringPtr text(r);
      output.write(text.get());
      if (!passed) {
        const auto doc = nlohmann::json::parse(text.get());
        std::cerr << "capcon: verification failed:";
        for (const auto& c : doc["report"]["checks"]) {
          if (!c["passed"].get<bool>()) std::cerr << ' ' << c["name"].get<std::string>();
        }
        std::cerr << "\n";
        return kVerifyFailed;
      }
      return kOk;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kInvalid;
}
