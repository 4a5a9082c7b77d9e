#include "dtk/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>

#include "dtk/data.hpp"
#include "dtk/distributed.hpp"
#include "dtk/kernels.hpp"
#include "dtk/pipeline.hpp"
#include "dtk/tuning.hpp"

namespace dtk::cli {

namespace {

std::size_t parse_plain(std::string_view text, std::string_view whole) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw CLI::ValidationError("count", "'" + std::string(whole) + "' is not an integer or 2^e");
  return value;
}

struct InputSpec {
  std::string in;
  std::string dist = "ud";
  std::string n = "2^20";
  std::uint64_t seed = 1;

  void add_to(CLI::App& app, bool allow_generator) {
    app.add_option("--in", in, "DTKV input file");
    if (allow_generator) {
      app.add_option("--dist", dist, "generate input instead: ud | nd | cd")->capture_default_str();
      app.add_option("--n", n, "generated size (integer or 2^e)")->capture_default_str();
      app.add_option("--seed", seed, "generator seed")->capture_default_str();
    }
  }

  std::vector<Value> load(std::size_t k) const {
    if (!in.empty()) return read_vector(in);
    return generate(parse_distribution(dist), parse_count(n), k, seed);
  }
};

struct ConfigSpec {
  std::string k;
  std::string backend = "radix";
  std::optional<unsigned> alpha;
  unsigned beta = 2;
  bool no_skip_last = false;
  double const_c = 3.0;
  unsigned threads = 0;

  void add_to(CLI::App& app) {
    app.add_option("--k", k, "number of elements to select (integer or 2^e)")->required();
    app.add_option("--backend", backend, "radix | bucket | bitonic")->capture_default_str();
    app.add_option("--alpha", alpha, "subrange size exponent (default: auto-tuned)");
    app.add_option("--beta", beta, "delegates per subrange")->capture_default_str();
    app.add_flag("--no-skip-last", no_skip_last, "run the first top-k to its final pass");
    app.add_option("--const", const_c, "alpha tuning constant")->capture_default_str();
    app.add_option("--threads", threads, "parallel lanes (0 = default)");
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    cfg.k = parse_count(k);
    if (cfg.k == 0) throw CLI::ValidationError("--k", "k must be at least 1");
    cfg.backend = parse_backend(backend);
    cfg.beta = beta;
    cfg.skip_last_iteration = !no_skip_last;
    cfg.const_c = const_c;
    cfg.threads = threads;
    if (alpha) {
      cfg.auto_alpha = false;
      cfg.alpha = *alpha;
    }
    return cfg;
  }
};

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot create " + path);
  return f;
}

/// Grid tokens: integers, "auto", "auto+N", "auto-N"; "a:b" is an inclusive range.
std::vector<unsigned> parse_grid(const std::string& text, unsigned auto_value) {
  auto token = [&](std::string_view t) -> long {
    if (t.starts_with("auto")) {
      t.remove_prefix(4);
      if (t.empty()) return auto_value;
      const bool neg = t.front() == '-';
      if (t.front() != '+' && !neg) throw CLI::ValidationError("--grid", "bad token");
      t.remove_prefix(1);
      const long d = static_cast<long>(parse_plain(t, text));
      return neg ? static_cast<long>(auto_value) - d : static_cast<long>(auto_value) + d;
    }
    return static_cast<long>(parse_plain(t, text));
  };
  std::vector<unsigned> grid;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto colon = item.find(':');
    long lo = token(item.substr(0, colon));
    long hi = colon == std::string_view::npos ? lo : token(item.substr(colon + 1));
    for (long g = std::max(0L, lo); g <= hi; ++g) grid.push_back(static_cast<unsigned>(g));
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return grid;
}

}  // namespace

std::size_t parse_count(std::string_view text) {
  if (const auto caret = text.find('^'); caret != std::string_view::npos) {
    if (parse_plain(text.substr(0, caret), text) != 2)
      throw CLI::ValidationError("count", "only base 2 is supported in '" + std::string(text) + "'");
    const std::size_t e = parse_plain(text.substr(caret + 1), text);
    if (e >= 64) throw CLI::ValidationError("count", "exponent too large in '" + std::string(text) + "'");
    return std::size_t{1} << e;
  }
  return parse_plain(text, text);
}

RunReport make_report(const PipelineConfig& cfg, std::size_t n, const TopKResult& r) {
  RunReport rep;
  rep.config = cfg;
  rep.n = n;
  rep.threshold = r.threshold;
  rep.stats = r.stats;
  const double dn = static_cast<double>(n);
  rep.delegate_ratio = static_cast<double>(r.stats.delegate_vector_len) / dn;
  rep.concat_ratio = static_cast<double>(r.stats.concatenated_len) / dn;
  rep.sum_ratio = rep.delegate_ratio + rep.concat_ratio;
  return rep;
}

void write_run_csv(std::ostream& out, const RunReport& r) {
  const auto& s = r.stats;
  out << kRunCsvHeader << '\n'
      << to_string(r.config.backend) << ',' << r.n << ',' << r.config.k << ',' << r.config.alpha << ','
      << r.config.beta << ',' << (r.config.skip_last_iteration ? 1 : 0) << ',' << r.threshold << ','
      << (r.verified ? 1 : 0) << ',' << s.delegate_vector_len << ',' << s.concatenated_len << ','
      << s.fully_qualified_subranges << ',' << s.partially_qualified_subranges << ',' << s.elements_read << ','
      << s.elements_written << ',' << s.stage_nanos(Stage::Delegate) << ',' << s.stage_nanos(Stage::FirstK)
      << ',' << s.stage_nanos(Stage::Concat) << ',' << s.stage_nanos(Stage::SecondK) << ','
      << s.total_nanos() << ',' << std::setprecision(8) << r.delegate_ratio << ',' << r.concat_ratio << ','
      << r.sum_ratio << '\n';
}

void print_report(std::ostream& out, const RunReport& r) {
  const auto& s = r.stats;
  out << "backend        " << to_string(r.config.backend) << '\n'
      << "n              " << r.n << '\n'
      << "k              " << r.config.k << '\n'
      << "alpha          " << r.config.alpha << '\n'
      << "beta           " << r.config.beta << '\n'
      << "skip_last      " << (r.config.skip_last_iteration ? "yes" : "no") << '\n'
      << "direct         " << (s.direct_fallback ? "yes" : "no") << '\n'
      << "threshold      " << r.threshold << '\n';
  if (r.verify_requested) out << "verified       " << (r.verified ? "true" : "false") << '\n';
  out << "delegate_len   " << s.delegate_vector_len << '\n'
      << "concat_len     " << s.concatenated_len << '\n'
      << "qualified      full=" << s.fully_qualified_subranges << " partial=" << s.partially_qualified_subranges
      << '\n'
      << "reads/writes   " << s.elements_read << " / " << s.elements_written << '\n'
      << "stage_ns       delegate=" << s.stage_nanos(Stage::Delegate) << " firstk=" << s.stage_nanos(Stage::FirstK)
      << " concat=" << s.stage_nanos(Stage::Concat) << " secondk=" << s.stage_nanos(Stage::SecondK)
      << " total=" << s.total_nanos() << '\n'
      << std::setprecision(6) << "ratios         delegate=" << r.delegate_ratio << " concat=" << r.concat_ratio
      << " sum=" << r.sum_ratio << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delegate-centric parallel top-k selection"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic DTKV vector");
  std::string gen_dist = "ud", gen_n, gen_k, gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("--dist", gen_dist, "ud | nd | cd")->capture_default_str();
  gen->add_option("--n", gen_n, "element count (integer or 2^e)")->required();
  gen->add_option("--k", gen_k, "target k (required for cd)");
  gen->add_option("--seed", gen_seed, "seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output path")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "run the delegate top-k pipeline");
  InputSpec run_in;
  ConfigSpec run_cfg;
  bool run_verify = false;
  std::string run_csv;
  run_in.add_to(*run_cmd, true);
  run_cfg.add_to(*run_cmd);
  run_cmd->add_flag("--verify", run_verify, "compare against sort-and-choose");
  run_cmd->add_option("--csv", run_csv, "write a one-row stats CSV");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep alpha or beta and time every point");
  InputSpec sw_in;
  ConfigSpec sw_cfg;
  std::string sw_param = "alpha", sw_grid, sw_csv;
  unsigned sw_reps = 1;
  sw_in.add_to(*sweep_cmd, true);
  sw_cfg.add_to(*sweep_cmd);
  sweep_cmd->add_option("--param", sw_param, "alpha | beta")->capture_default_str();
  sweep_cmd->add_option("--grid", sw_grid, "e.g. 3,4,5 or auto-4:auto+4 or 1:4")->required();
  sweep_cmd->add_option("--reps", sw_reps, "timed runs per point (median kept)")->capture_default_str();
  sweep_cmd->add_option("--csv", sw_csv, "output CSV (default stdout)");

  // dist
  auto* dist_cmd = app.add_subcommand("dist", "partitioned multi-worker top-k");
  InputSpec d_in;
  ConfigSpec d_cfg;
  std::size_t d_workers = 1;
  std::string d_max_resident = "2^26", d_csv;
  unsigned d_tpw = 1;
  bool d_verify = false;
  d_in.add_to(*dist_cmd, true);
  d_cfg.add_to(*dist_cmd);
  dist_cmd->add_option("--workers", d_workers, "worker lanes")->capture_default_str();
  dist_cmd->add_option("--max-resident", d_max_resident, "max resident elements per worker")
      ->capture_default_str();
  dist_cmd->add_option("--threads-per-worker", d_tpw, "lanes inside each worker")->capture_default_str();
  dist_cmd->add_flag("--verify", d_verify, "compare against sort-and-choose");
  dist_cmd->add_option("--csv", d_csv, "per-worker CSV");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("dtk");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*gen) {
      const Distribution d = parse_distribution(gen_dist);
      if (d == Distribution::customized && gen_k.empty())
        throw CLI::ValidationError("--k", "--dist cd requires --k");
      const std::size_t n = parse_count(gen_n);
      const std::size_t k = gen_k.empty() ? 1 : parse_count(gen_k);
      const auto v = generate(d, n, k, gen_seed);
      write_vector(gen_out, v);
      out << "wrote " << v.size() << " elements (" << to_string(d) << ", seed " << gen_seed << ") to " << gen_out
          << '\n';
      return kExitOk;
    }

    if (*run_cmd) {
      const PipelineConfig cfg = run_cfg.build();
      const auto v = run_in.load(cfg.k);
      const PipelineConfig norm = validate_config(cfg, v.size());
      const TopKResult r = delegate_topk(v, norm);
      RunReport rep = make_report(norm, v.size(), r);
      if (run_verify) {
        rep.verify_requested = true;
        rep.verified = sort_and_choose(v, cfg.k).values == r.values;
      }
      print_report(out, rep);
      if (!run_csv.empty()) {
        auto f = open_csv(run_csv);
        write_run_csv(f, rep);
      }
      return run_verify && !rep.verified ? kExitMismatch : kExitOk;
    }

    if (*sweep_cmd) {
      const PipelineConfig cfg = sw_cfg.build();
      const auto v = sw_in.load(cfg.k);
      SweepParam param;
      if (sw_param == "alpha") param = SweepParam::alpha;
      else if (sw_param == "beta") param = SweepParam::beta;
      else throw CLI::ValidationError("--param", "expected alpha or beta");
      const PipelineConfig norm = validate_config(cfg, v.size());
      const auto grid = parse_grid(sw_grid, param == SweepParam::alpha ? norm.alpha : norm.beta);
      const auto rows = sweep(v, cfg, param, grid, SweepOptions{sw_reps});
      if (sw_csv.empty()) {
        write_sweep_csv(out, rows);
      } else {
        auto f = open_csv(sw_csv);
        write_sweep_csv(f, rows);
        out << "wrote " << rows.size() << " rows to " << sw_csv << '\n';
      }
      return kExitOk;
    }

    if (*dist_cmd) {
      const PipelineConfig cfg = d_cfg.build();
      std::vector<Value> v;
      VectorSource src;
      if (!d_in.in.empty()) {
        src.file = d_in.in;
        if (d_verify) v = read_vector(d_in.in);
      } else {
        v = d_in.load(cfg.k);
        src.memory = v;
      }
      DistributedOptions opts;
      opts.workers = d_workers;
      opts.max_resident = parse_count(d_max_resident);
      opts.threads_per_worker = d_tpw;
      const DistributedResult dr = run_distributed(src, cfg, opts);
      const std::size_t n = dr.plan.n;
      RunReport rep = make_report(validate_config(cfg, n), n, dr.result);
      if (d_verify) {
        rep.verify_requested = true;
        rep.verified = sort_and_choose(v, cfg.k).values == dr.result.values;
      }
      print_report(out, rep);
      out << "workers        " << dr.plan.workers << " (partitions=" << dr.plan.partitions.size()
          << ", non_resident=" << dr.plan.non_resident_count() << ")\n"
          << "gathered_bytes " << dr.gathered_bytes << '\n'
          << "wall_ns        " << dr.wall_nanos << '\n';
      if (!d_csv.empty()) {
        auto f = open_csv(d_csv);
        write_dist_csv(f, dr);
      }
      return d_verify && !rep.verified ? kExitMismatch : kExitOk;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace dtk::cli
