#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "difflab/analytic.hpp"
#include "difflab/ddim.hpp"
#include "difflab/ddpm.hpp"
#include "difflab/error.hpp"
#include "difflab/experiments.hpp"
#include "difflab/fokker_planck.hpp"
#include "difflab/score.hpp"
#include "difflab/sde.hpp"
#include "difflab/stats.hpp"
#include "difflab/vae.hpp"

namespace py = pybind11;
using namespace difflab;

namespace {

std::vector<double> as_vector(const Eigen::Ref<const Vec>& x) {
  return std::vector<double>(x.data(), x.data() + x.size());
}

RecordOptions stride(std::size_t k) { return RecordOptions{k}; }

Config config_from(const std::map<std::string, std::string>& kv) {
  Config c;
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical lab for diffusion-model mathematics";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Ensemble>(m, "Ensemble")
      .def_readonly("times", &Ensemble::times)
      .def_readonly("frames", &Ensemble::frames)
      .def_readonly("seed", &Ensemble::seed)
      .def_property_readonly("final", &Ensemble::final)
      .def("__len__", [](const Ensemble& e) { return e.times.size(); });

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states);

  // Distributions

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init<std::vector<double>, Mat, std::vector<double>>(), py::arg("weights"),
           py::arg("means"), py::arg("variances"))
      .def_static("from_1d", &GaussianMixture::from_1d, py::arg("weights"), py::arg("means"),
                  py::arg("stddevs"))
      .def_property_readonly("weights", &GaussianMixture::weights)
      .def_property_readonly("means", &GaussianMixture::means)
      .def_property_readonly("variances", &GaussianMixture::variances)
      .def_property_readonly("dim", &GaussianMixture::dim)
      .def("sample",
           [](const GaussianMixture& g, std::size_t n, std::uint64_t seed) {
             Rng rng(seed);
             return g.sample(n, rng);
           },
           py::arg("n"), py::arg("seed") = 0)
      .def("cdf", &GaussianMixture::cdf, py::arg("x"))
      .def("cdf",
           [](const GaussianMixture& g, const Vec& x) {
             return Vec(x.unaryExpr([&](double v) { return g.cdf(v); }));
           },
           py::arg("x"))
      .def("log_pdf", [](const GaussianMixture& g, const Mat& x) { return mixture_log_pdf(g, x); })
      .def("score", [](const GaussianMixture& g, const Mat& x) { return mixture_score(g, x); });

  m.def("diffused_mixture", &diffused_mixture, py::arg("gmm"), py::arg("alpha_bar"));
  m.def("convolved_mixture", &convolved_mixture, py::arg("gmm"), py::arg("noise_std"));
  m.def("kl_gaussians", &kl_gaussians, py::arg("mu0"), py::arg("var0"), py::arg("mu1"),
        py::arg("var1"));

  // Statistics

  m.def("ks_statistic",
        [](const Vec& xs, const std::function<double(double)>& cdf) {
          return ks_statistic(as_vector(xs), cdf);
        },
        py::arg("samples"), py::arg("cdf"));
  m.def("ks_two_sample",
        [](const Vec& a, const Vec& b) { return ks_two_sample(as_vector(a), as_vector(b)); });
  m.def("wasserstein1",
        [](const Vec& a, const Vec& b) { return wasserstein1_1d(as_vector(a), as_vector(b)); });

  // DDPM and DDIM

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init<std::vector<double>>(), py::arg("betas"))
      .def_static("linear", &NoiseSchedule::linear, py::arg("steps"), py::arg("beta_min"),
                  py::arg("beta_max"))
      .def_static("constant", &NoiseSchedule::constant, py::arg("steps"), py::arg("beta"))
      .def_property_readonly("steps", &NoiseSchedule::steps)
      .def("beta", &NoiseSchedule::beta)
      .def("alpha", &NoiseSchedule::alpha)
      .def("alpha_bar", &NoiseSchedule::alpha_bar);

  py::enum_<Prediction>(m, "Prediction").value("X0", Prediction::kX0).value("EPS", Prediction::kEps);

  m.def("forward_sample",
        [](const Mat& x0, std::size_t t, const NoiseSchedule& s, std::uint64_t seed) {
          StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
          return forward_sample(x0, t, s, bank);
        },
        py::arg("x0"), py::arg("t"), py::arg("schedule"), py::arg("seed") = 0);
  m.def("forward_trajectory",
        [](const Mat& x0, const NoiseSchedule& s, std::uint64_t seed, std::size_t k) {
          return forward_trajectory(x0, s, seed, stride(k));
        },
        py::arg("x0"), py::arg("schedule"), py::arg("seed") = 0, py::arg("stride") = 1);
  m.def("mixture_oracle", &mixture_oracle, py::arg("gmm"), py::arg("schedule"), py::arg("mode"),
        "Exact E[x0 | x_t] or E[eps | x_t] as a callable (x_t, t) -> array");
  m.def("ancestral_sample",
        [](const NoiseSchedule& s, Prediction mode, const Predictor& f, const Mat& x_T,
           std::uint64_t seed, std::size_t k) {
          return ancestral_sample(DdpmModel{s, mode, f}, x_T, seed, stride(k));
        },
        py::arg("schedule"), py::arg("mode"), py::arg("predictor"), py::arg("x_T"),
        py::arg("seed") = 0, py::arg("stride") = 0);
  m.def("ddim_sigma", &ddim_sigma, py::arg("alpha_t"), py::arg("alpha_prev"), py::arg("eta"));
  m.def("ddim_subsequence", &ddim_subsequence, py::arg("T"), py::arg("S"));
  m.def("ddim_sample",
        [](const NoiseSchedule& s, Prediction mode, const Predictor& f, const Mat& x_T,
           std::size_t steps, double eta, std::uint64_t seed, std::size_t k) {
          return ddim_sample(DdpmModel{s, mode, f}, x_T, DdimConfig{steps, eta}, seed, stride(k));
        },
        py::arg("schedule"), py::arg("mode"), py::arg("predictor"), py::arg("x_T"),
        py::arg("steps") = 0, py::arg("eta") = 0.0, py::arg("seed") = 0, py::arg("stride") = 0);

  // Score matching and Langevin

  m.def("uniform_start", &uniform_start, py::arg("n"), py::arg("d"), py::arg("lo"), py::arg("hi"),
        py::arg("seed") = 0);
  m.def("langevin_sample",
        [](const ScoreFn& score, const Mat& x0, double tau, std::size_t steps, bool noise,
           std::uint64_t seed, std::size_t k) {
          return langevin_sample(score, x0, LangevinConfig{tau, steps, noise}, seed, stride(k));
        },
        py::arg("score"), py::arg("x0"), py::arg("tau") = 0.05, py::arg("steps") = 100,
        py::arg("noise") = true, py::arg("seed") = 0, py::arg("stride") = 0);
  m.def("esm_loss",
        [](const ScoreFn& model, const ScoreFn& ref, const Mat& x) {
          const auto l = esm_loss(model, ref, x);
          return py::make_tuple(l.mean, l.std_error);
        },
        py::arg("model"), py::arg("reference"), py::arg("x"));
  m.def("dsm_loss",
        [](const ScoreFn& model, const Mat& x0, double sigma, std::uint64_t seed) {
          StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
          const auto l = dsm_loss(model, x0, sigma, bank);
          return py::make_tuple(l.mean, l.std_error);
        },
        py::arg("model"), py::arg("x0"), py::arg("sigma"), py::arg("seed") = 0);

  // SDE

  py::class_<SdeParams>(m, "SdeParams")
      .def_static("vp", &SdeParams::vp, py::arg("betas"))
      .def_static("ve", &SdeParams::ve, py::arg("sigmas"))
      .def_property_readonly("steps", &SdeParams::steps)
      .def("alpha_bar", &SdeParams::alpha_bar);
  m.def("vp_mixture_score", &vp_mixture_score, py::arg("gmm"), py::arg("params"));
  m.def("ve_mixture_score", &ve_mixture_score, py::arg("gmm"), py::arg("params"));
  m.def("sde_forward",
        [](const SdeParams& p, const Mat& x0, std::uint64_t seed, std::size_t k) {
          return sde_forward(p, x0, seed, stride(k));
        },
        py::arg("params"), py::arg("x0"), py::arg("seed") = 0, py::arg("stride") = 0);
  m.def("sde_reverse",
        [](const SdeParams& p, const LevelScore& score, const Mat& xN, std::uint64_t seed,
           std::size_t k) { return sde_reverse(p, score, xN, seed, stride(k)); },
        py::arg("params"), py::arg("score"), py::arg("x_N"), py::arg("seed") = 0,
        py::arg("stride") = 0);
  m.def("predictor_corrector",
        [](const SdeParams& p, const LevelScore& score, const Mat& xN, std::size_t corrector_steps,
           double corrector_fraction, std::uint64_t seed, std::size_t k) {
          return predictor_corrector(p, score, xN, PcConfig{corrector_steps, corrector_fraction},
                                     seed, stride(k));
        },
        py::arg("params"), py::arg("score"), py::arg("x_N"), py::arg("corrector_steps") = 1,
        py::arg("corrector_fraction") = 0.1, py::arg("seed") = 0, py::arg("stride") = 0);
  m.def("euler_solve",
        [](const OdeRhs& f, const Vec& x0, double t0, double t1, std::size_t steps) {
          return euler_solve({f, x0, t0, t1, steps});
        },
        py::arg("f"), py::arg("x0"), py::arg("t0"), py::arg("t1"), py::arg("steps"));
  m.def("rk4_solve",
        [](const OdeRhs& f, const Vec& x0, double t0, double t1, std::size_t steps) {
          return rk4_solve({f, x0, t0, t1, steps});
        },
        py::arg("f"), py::arg("x0"), py::arg("t0"), py::arg("t1"), py::arg("steps"));

  // Fokker-Planck and Langevin equations

  py::class_<Grid1D>(m, "Grid1D")
      .def(py::init([](double lo, double hi, std::size_t n, double dt) {
             Grid1D g{lo, hi, n, dt};
             g.validate();
             return g;
           }),
           py::arg("x_min"), py::arg("x_max"), py::arg("n"), py::arg("dt"))
      .def_readonly("x_min", &Grid1D::x_min)
      .def_readonly("x_max", &Grid1D::x_max)
      .def_readonly("n", &Grid1D::n)
      .def_readonly("dt", &Grid1D::dt)
      .def_property_readonly("dx", &Grid1D::dx)
      .def("nodes", &Grid1D::nodes);

  py::class_<FpCoefficients>(m, "FpCoefficients")
      .def(py::init([](FieldFn d1, FieldFn d2) { return FpCoefficients{d1, d2, false}; }),
           py::arg("d1"), py::arg("d2"))
      .def_static("heat", &FpCoefficients::heat, py::arg("k"))
      .def_static("ornstein_uhlenbeck", &FpCoefficients::ornstein_uhlenbeck, py::arg("gamma"),
                  py::arg("diffusion"));

  py::class_<DensityHistory>(m, "DensityHistory")
      .def_readonly("grid", &DensityHistory::grid)
      .def_readonly("times", &DensityHistory::times)
      .def_readonly("densities", &DensityHistory::densities);

  m.def("fp_evolve", &fp_evolve, py::arg("coeffs"), py::arg("grid"), py::arg("p0"), py::arg("t0"),
        py::arg("t_end"), py::arg("snapshot_times") = std::vector<double>{});
  m.def("probability_current", &probability_current, py::arg("coeffs"), py::arg("grid"),
        py::arg("p"), py::arg("t") = 0.0);
  m.def("heat_kernel", py::vectorize(&heat_kernel), py::arg("x"), py::arg("t"), py::arg("k"),
        py::arg("x0") = 0.0);
  m.def("gaussian_density", &gaussian_density, py::arg("grid"), py::arg("mean"),
        py::arg("variance"));
  m.def("mass", &mass, py::arg("p"), py::arg("dx"));
  m.def("linear_langevin_solution",
        [](double gamma, double q, double xi0, double t) {
          const auto law = linear_langevin_solution(gamma, q, xi0, t);
          return py::make_tuple(law.mean, law.variance);
        },
        py::arg("gamma"), py::arg("q"), py::arg("xi0"), py::arg("t"));

  py::class_<LangevinSde>(m, "LangevinSde")
      .def(py::init([](std::function<double(double)> h, std::function<double(double)> g, double q) {
             return LangevinSde{h, g, q};
           }),
           py::arg("h"), py::arg("g"), py::arg("q") = 2.0)
      .def_static("ornstein_uhlenbeck", &LangevinSde::ornstein_uhlenbeck, py::arg("gamma"),
                  py::arg("q"));

  py::class_<KmEstimate>(m, "KmEstimate")
      .def_readonly("d1", &KmEstimate::d1)
      .def_readonly("d2", &KmEstimate::d2)
      .def_readonly("d1_se", &KmEstimate::d1_se)
      .def_readonly("d2_se", &KmEstimate::d2_se)
      .def_readonly("dts", &KmEstimate::dts)
      .def_readonly("d1_at", &KmEstimate::d1_at)
      .def_readonly("d2_at", &KmEstimate::d2_at);

  m.def("simulate_langevin",
        [](const LangevinSde& sde, const Mat& x0, double dt, std::size_t steps, std::uint64_t seed,
           std::size_t k) { return simulate_langevin(sde, x0, dt, steps, seed, stride(k)); },
        py::arg("sde"), py::arg("x0"), py::arg("dt"), py::arg("steps"), py::arg("seed") = 0,
        py::arg("stride") = 0);
  m.def("km_estimate", &km_estimate, py::arg("sde"), py::arg("x"), py::arg("dt_ladder"),
        py::arg("n_paths"), py::arg("seed") = 0, py::arg("substeps") = 20,
        py::call_guard<py::gil_scoped_release>());

  // VAE

  py::class_<AffineVae>(m, "AffineVae")
      .def_static("identity", &AffineVae::identity, py::arg("d"))
      .def_readwrite("a", &AffineVae::a)
      .def_readwrite("b", &AffineVae::b)
      .def_readwrite("t", &AffineVae::t)
      .def_readwrite("c", &AffineVae::c)
      .def_readwrite("v", &AffineVae::v)
      .def_readwrite("s", &AffineVae::s)
      .def("pack", &AffineVae::pack)
      .def_static("unpack", &AffineVae::unpack, py::arg("flat"), py::arg("d"));

  m.def("elbo",
        [](const AffineVae& vae, const Vec& x, const Mat& eps) {
          const auto b = elbo(vae, x, eps);
          return py::make_tuple(b.reconstruction, b.prior_matching);
        },
        py::arg("vae"), py::arg("x"), py::arg("eps"),
        "(reconstruction, prior_matching) with the ELBO their difference");
  m.def("elbo_gradient", &elbo_gradient, py::arg("vae"), py::arg("x"), py::arg("eps"));
  m.def("model_log_evidence", &model_log_evidence, py::arg("vae"), py::arg("x"));
  m.def("train_affine_vae",
        [](const Mat& data, std::size_t steps, std::uint64_t seed) {
          VaeTrainConfig cfg;
          cfg.steps = steps;
          Rng rng(seed);
          return train_affine_vae(data, AffineVae::identity(data.cols()), cfg, rng).vae;
        },
        py::arg("data"), py::arg("steps") = 4000, py::arg("seed") = 0);

  // Experiment runner

  m.def("experiments", [] {
    std::vector<py::dict> out;
    for (const auto& e : experiment_registry())
      out.push_back(py::dict(py::arg("name") = e.name, py::arg("section") = e.section,
                             py::arg("description") = e.description));
    return out;
  });
  m.def("run_experiment",
        [](const std::string& name, const std::map<std::string, std::string>& config,
           const std::filesystem::path& out) {
          const auto r = run_experiment(name, config_from(config), out);
          return py::make_tuple(r.dir, r.artifacts);
        },
        py::arg("name"), py::arg("config") = std::map<std::string, std::string>{},
        py::arg("out") = std::filesystem::path("runs"));
}
