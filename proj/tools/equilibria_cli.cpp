#include <equilibria/bounds.hpp>
#include <equilibria/experiments.hpp>
#include <equilibria/morse.hpp>
#include <equilibria/solids.hpp>
#include <equilibria/solver.hpp>
#include <equilibria/voronoi.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace equilibria;

namespace {

struct Global {
  std::string out;
  bool json = false;
  bool csv = false;
  bool no_timing = false;
  std::uint64_t rng_seed = 1;
  int threads = 1;
  double tol_residual = 1e-10;
  double tol_dedup = 1e-6;
  double tol_degenerate = 1e-6;
  std::string data_dir = EQUILIBRIA_DATA_DIR;

  ExperimentOptions options() const {
    ExperimentOptions o;
    o.solve.rng_seed = rng_seed;
    o.solve.threads = threads;
    o.solve.tol_residual = tol_residual;
    o.solve.dedup_radius = tol_dedup;
    o.solve.degenerate_threshold = tol_degenerate;
    o.data_dir = data_dir;
    return o;
  }
};

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt_vec(const Vec3& v, int prec = 10) {
  std::ostringstream s;
  s << std::setprecision(prec) << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return s.str();
}

std::string fmt_ranks(const std::array<int, 4>& r) {
  return "(" + std::to_string(r[0]) + "," + std::to_string(r[1]) + "," + std::to_string(r[2]) + "," +
         std::to_string(r[3]) + ")";
}

int finish(const ExperimentReport& r, const Global& g) {
  for (const auto& f : r.failures) std::cerr << "FAIL: " << f << "\n";
  if (g.json) {
    Sink s(g.out);
    s.os() << to_json(r, !g.no_timing).dump(2) << "\n";
  }
  return r.pass ? 0 : 1;
}

void print_equilibria(std::ostream& os, const ExperimentReport& r) {
  os << std::left << std::setw(12) << "kind" << std::setw(46) << "position" << "eigenvalues\n";
  for (const auto& e : r.equilibria) {
    std::string kind = e.kind + (e.center ? "*" : "");
    os << std::setw(12) << kind << std::setw(46) << fmt_vec(e.x) << fmt_vec(e.eigenvalues, 5);
    if (e.ranks) os << "  ranks " << fmt_ranks(*e.ranks);
    os << "\n";
  }
  os << "counts by index (off-centre): " << fmt_ranks(r.counts);
  if (r.center_alt_sum) os << "; centre alternating sum " << *r.center_alt_sum;
  os << "\n";
}

void write_equilibria_csv(std::ostream& os, const ExperimentReport& r) {
  os << "x,y,z,kind,index,center,l1,l2,l3,r0,r1,r2,r3\n";
  os << std::setprecision(15);
  for (const auto& e : r.equilibria) {
    os << e.x.x() << "," << e.x.y() << "," << e.x.z() << "," << e.kind << "," << e.index << "," << e.center << ","
       << e.eigenvalues.x() << "," << e.eigenvalues.y() << "," << e.eigenvalues.z();
    for (int k = 0; k < 4; ++k) os << "," << (e.ranks ? std::to_string((*e.ranks)[k]) : "");
    os << "\n";
  }
}

Vec3 parse_point(const std::string& s) {
  std::stringstream ss(s);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  if (v.size() != 3) throw std::invalid_argument("a point needs three comma-separated coordinates");
  return {v[0], v[1], v[2]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibria of point-charge potentials"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--out", g.out, "Write JSON/CSV output to this file");
  app.add_flag("--json", g.json, "Emit a JSON report");
  app.add_flag("--csv", g.csv, "Emit CSV");
  app.add_flag("--no-timing", g.no_timing, "Leave wall-clock times out of JSON reports");
  app.add_option("--rng-seed", g.rng_seed, "Seed for random starting points");
  app.add_option("--threads", g.threads, "Worker threads for the solver")->check(CLI::PositiveNumber);
  app.add_option("--tol-residual", g.tol_residual, "Relative gradient residual accepted as converged");
  app.add_option("--tol-dedup", g.tol_dedup, "Merge radius for equilibria, relative to the diameter");
  app.add_option("--tol-degenerate", g.tol_degenerate, "Smallest relative Hessian eigenvalue of a Morse point");
  app.add_option("--data", g.data_dir, "Directory holding expected_tables.json");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a configuration");
  std::string gen_spec;
  double perturb_mag = 0;
  std::uint64_t perturb_seed = 1;
  gen->add_option("spec", gen_spec, "Configuration spec, e.g. cube or antiprism:N=4,R=1,h=1.37")->required();
  gen->add_option("--perturb", perturb_mag, "Move every charge by up to this distance");
  gen->add_option("--perturb-seed", perturb_seed);

  // solve / classify
  auto* solve = app.add_subcommand("solve", "Find and classify all equilibria");
  std::string spec;
  double p = 1.0;
  solve->add_option("spec", spec)->required();
  solve->add_option("--p", p, "Exponent of the potential")->check(CLI::PositiveNumber);

  auto* cls = app.add_subcommand("classify", "Local homology signature at a point");
  std::string point;
  std::string labeling;
  int level = 5;
  double eps_rel = 0.05;
  cls->add_option("spec", spec)->required();
  cls->add_option("--point", point, "x,y,z; defaults to the centroid");
  cls->add_option("--p", p)->check(CLI::PositiveNumber);
  cls->add_option("--level", level, "Icosphere subdivision level")->check(CLI::Range(0, 8));
  cls->add_option("--eps", eps_rel, "Sphere radius relative to the nearest charge");
  cls->add_option("--labeling", labeling, "Dump the black/white labels as CSV");

  // voronoi
  auto* vor = app.add_subcommand("voronoi", "Effective Voronoi cells and limit counts");
  std::string off_path;
  vor->add_option("spec", spec)->required();
  vor->add_option("--off", off_path, "Write the clipped cell geometry as OFF");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "Evaluate the closed-form bounds");
  long bn = 0;
  long bp = 0;
  long bm = 25, bl = 0, bk = 0;
  bnd->add_option("--n", bn, "Number of charges")->required()->check(CLI::PositiveNumber);
  bnd->add_option("--p", bp, "Even exponent");
  bnd->add_option("--m", bm, "Equilibria of the base configuration for the iterate formula");
  bnd->add_option("--layers", bl, "Layers for the iterate formula");
  bnd->add_option("--k", bk, "Anti-prism parameter for the ratio formula");

  // table
  auto* tbl = app.add_subcommand("table", "Reproduce a table of solids");
  std::string family;
  tbl->add_option("family", family, "platonic, archimedean or catalan")->required();

  auto* cex = app.add_subcommand("counterexample", "Potential vs. distance function on the truncated octahedron");

  auto* scan = app.add_subcommand("antiprism-scan", "Scan anti-prism heights");
  int k = 4;
  ScanGrid grid;
  scan->add_option("--k", k)->check(CLI::Range(3, 64));
  scan->add_option("--points", grid.points)->check(CLI::PositiveNumber);
  scan->add_option("--lo", grid.lo);
  scan->add_option("--hi", grid.hi);
  scan->add_option("--refine", grid.refine)->check(CLI::PositiveNumber);

  auto* ptr = app.add_subcommand("prism-transition", "Centre of a prism across h = sqrt(2) R");
  int N = 4;
  double beta = 0, R = 1;
  bool anti = false;
  ptr->add_option("--N", N)->check(CLI::Range(3, 64));
  ptr->add_option("--beta", beta, "Twist between the rings");
  ptr->add_flag("--anti", anti, "Use the anti-prism twist pi/N");
  ptr->add_option("--R", R)->check(CLI::PositiveNumber);

  auto* itr = app.add_subcommand("iterate-ratio", "Iterated square anti-prism");
  int layers = 2;
  double h = 0, shrink = 0.02;
  itr->add_option("--layers", layers)->check(CLI::Range(1, 3));
  itr->add_option("--height", h, "Relative height; scanned when omitted");
  itr->add_option("--shrink", shrink)->check(CLI::Range(1e-6, 0.5));

  auto* vps = app.add_subcommand("vp-sweep", "Equilibria of V_p over a list of exponents");
  std::vector<double> ps{1, 1.3, 2, 4};
  vps->add_option("spec", spec)->required();
  vps->add_option("--p", ps)->delimiter(',');

  auto* slc = app.add_subcommand("slice", "Equilibria of V_p on random lines");
  int lines = 100;
  double sp = 2;
  slc->add_option("spec", spec)->required();
  slc->add_option("--p", sp, "Even exponent");
  slc->add_option("--lines", lines)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto o = g.options();
    auto config = [&]() { return generate(parse_spec(spec)); };

    if (*gen) {
      auto c = generate(parse_spec(gen_spec));
      if (perturb_mag > 0) c = perturb(c, perturb_mag, perturb_seed);
      Sink s(g.out);
      s.os() << to_json(c).dump(2) << "\n";
      return 0;
    }

    if (*solve) {
      auto c = config();
      auto r = make_report("solve", analyze(c, {p}, o), o);
      if (g.csv) {
        Sink s(g.out);
        write_equilibria_csv(s.os(), r);
      } else if (!g.json) {
        print_equilibria(std::cout, r);
      }
      return finish(r, g);
    }

    if (*cls) {
      auto c = config();
      Vec3 x = point.empty() ? c.centroid() : parse_point(point);
      PotentialParams pp{p};
      SignatureOptions so;
      so.level = level;
      so.epsilon_rel = eps_rel;
      auto sig = signature_at(c, pp, x, so);
      auto cp = critical_point_at(c, pp, x, o.solve);
      if (!labeling.empty()) {
        std::ofstream f(labeling);
        write_labeling_csv(binary_sphere_function(c, pp, x, eps_rel * nearest_charge_distance(c, x), level), f);
      }
      nlohmann::json j{{"point", vec_json(x)},       {"ranks", ranks_json(sig.ranks)},
                       {"alt_sum", sig.alt_sum()},   {"stable", sig.stable},
                       {"epsilon", sig.epsilon},     {"gradient_norm", cp.grad_norm},
                       {"eigenvalues", vec_json(cp.hess_eigs)}, {"kind", kind_name(classify(cp, c.all_positive()).kind)}};
      if (g.json) {
        Sink s(g.out);
        s.os() << j.dump(2) << "\n";
      } else {
        std::cout << "point " << fmt_vec(x) << "\nkind " << j["kind"].get<std::string>() << "\nranks "
                  << fmt_ranks(sig.ranks) << " alternating sum " << sig.alt_sum() << (sig.stable ? "" : " (unstable)")
                  << "\n";
      }
      return sig.stable ? 0 : 1;
    }

    if (*vor) {
      auto c = config();
      auto vc = build_voronoi(c.points);
      auto rep = effective_cells(vc);
      if (!off_path.empty()) {
        std::ofstream f(off_path);
        write_off(vc, f);
      }
      nlohmann::json j{{"label", c.label}, {"counts", ranks_json(rep.counts)}, {"borderline", rep.borderline.size()}};
      for (const auto& e : rep.effective)
        j["effective"].push_back({{"dim", e.dim}, {"point", vec_json(e.point)}, {"generators", vc.cells[e.cell].generators}});
      if (g.json) {
        Sink s(g.out);
        s.os() << j.dump(2) << "\n";
      } else {
        std::cout << "effective cells by dimension " << fmt_ranks(rep.counts) << "; borderline " << rep.borderline.size()
                  << "\n";
      }
      return 0;
    }

    if (*bnd) {
      std::optional<long> even;
      if (bp) even = bp;
      auto b = evaluate_bounds(bn, even);
      std::vector<std::pair<std::string, std::string>> rows{{"maxwell", b.maxwell.str()},
                                                            {"morse_lower", b.morse_lower.str()},
                                                            {"gns2007", b.gns2007.str()},
                                                            {"zolotov", b.zolotov.str()},
                                                            {"bezout_main", b.bezout_main.str()}};
      if (b.bezout_p) {
        rows.push_back({"bezout_p", b.bezout_p->str()});
        rows.push_back({"zolotov_p_prior", b.zolotov_p_prior->str()});
        rows.push_back({"slice_bound", b.slice_bound->str()});
      }
      if (bl > 0) {
        auto f = iterate_formulas(bm, bn, bl);
        rows.push_back({"iterate_count", f.count.str()});
        rows.push_back({"iterate_ratio", to_string(f.ratio)});
        rows.push_back({"iterate_limit", to_string(f.limit)});
      }
      if (bk > 0) rows.push_back({"antiprism_ratio", to_string(antiprism_ratio(bk))});
      if (g.json) {
        nlohmann::json j;
        for (const auto& [key, v] : rows) j[key] = v;
        Sink s(g.out);
        s.os() << j.dump(2) << "\n";
      } else {
        for (const auto& [key, v] : rows) std::cout << std::left << std::setw(18) << key << v << "\n";
      }
      return 0;
    }

    if (*tbl) {
      auto fx = load_expected_default(o);
      auto t = run_table(parse_family(family), o, fx);
      if (g.json) {
        Sink s(g.out);
        s.os() << to_json(t, !g.no_timing).dump(2) << "\n";
      } else if (g.csv) {
        Sink s(g.out);
        write_table_csv(t, s.os());
      } else {
        write_table_csv(t, std::cout);
      }
      for (const auto& r : t.rows)
        if (!(r.match && r.ranks_match))
          std::cerr << "MISMATCH: " << r.expected.display << " observed (" << r.saddles2 << ", " << r.saddles1 << ", "
                    << (r.center ? std::to_string(*r.center) : "?") << ") expected (" << r.expected.saddles2 << ", "
                    << r.expected.saddles1 << ", " << r.expected.center << ")\n";
      return std::min(t.mismatches(), 125);
    }

    if (*cex) {
      auto r = run_counterexample(o);
      if (!g.json)
        std::cout << "potential: " << r.v_saddles1 << " 1-saddles, " << r.v_saddles2 << " 2-saddles\n"
                  << "distance:  " << r.e_saddles1 << " 1-saddles, " << r.e_saddles2 << " 2-saddles\n"
                  << "equilibria on a hexagon-edge symmetry line: " << r.line_equilibria << "\n";
      return finish(r.report, g);
    }

    if (*scan) {
      auto r = run_antiprism_scan(k, o, grid);
      if (g.csv) {
        Sink s(g.out);
        s.os() << "h,total,saddles1,saddles2,degenerate\n";
        for (const auto& x : r.samples)
          s.os() << x.h << "," << x.total << "," << x.saddles1 << "," << x.saddles2 << "," << x.degenerate << "\n";
      } else if (!g.json) {
        std::cout << "k=" << k << " optimal h/R " << r.optimal_h << " with " << r.optimal_count << " equilibria";
        if (r.ratio) std::cout << " (ratio " << to_string(*r.ratio) << ")";
        std::cout << "\n";
      }
      return finish(r.report, g);
    }

    if (*ptr) {
      if (anti) beta = std::numbers::pi / N;
      auto r = run_prism_transition(N, beta, R, o);
      if (!g.json)
        std::cout << "centre index below " << r.index_below << ", above " << r.index_above
                  << "; smallest eigenvalue at the transition " << r.transverse_relative << " of the Hessian scale; "
                  << r.axis_saddles.size() << " axis 1-saddles above\n";
      return finish(r.report, g);
    }

    if (*itr) {
      std::optional<double> hh;
      if (h > 0) hh = h;
      auto r = run_iterate_ratio(layers, o, hh, shrink);
      if (!g.json)
        std::cout << "layers " << layers << ": " << r.count << " equilibria (expected " << r.expected.str()
                  << "), ratio " << to_string(r.ratio) << ", h/R " << r.h << ", shrink " << r.shrink << "\n";
      return finish(r.report, g);
    }

    if (*vps) {
      auto r = run_vp_sweep(config(), ps, o);
      if (!g.json)
        for (const auto& e : r.entries)
          std::cout << "p=" << e.p << " counts " << fmt_ranks(e.counts) << " degenerate " << e.degenerate
                    << " centre " << e.center_kind << "\n";
      return finish(r.report, g);
    }

    if (*slc) {
      auto r = run_slice(config(), sp, lines, o);
      if (!g.json)
        std::cout << lines << " lines: at most " << r.max_count << " equilibria, bound " << r.bound
                  << (r.resolved ? "" : " (some roots unresolved)") << "\n";
      return finish(r.report, g);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
