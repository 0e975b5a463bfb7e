#include "qauto/bb84.hpp"
#include "qauto/control_loop.hpp"
#include "qauto/error.hpp"
#include "qauto/perturbation.hpp"
#include "qauto/qubit.hpp"
#include "qauto/rigid_body.hpp"
#include "qauto/rng.hpp"
#include "qauto/scenario.hpp"
#include "qauto/spdc.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qauto;

namespace {

py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict table_dict(const scenario::Table& t) {
  py::dict d;
  d["columns"] = t.columns;
  d["rows"] = t.rows;
  return d;
}

py::dict run_log_dict(const scenario::RunLog& log) {
  py::dict d;
  d["header"] = from_json(log.header);
  d["summary"] = from_json(log.summary);
  py::dict tables;
  for (const auto& [name, t] : log.tables) tables[py::str(name)] = table_dict(t);
  d["tables"] = tables;
  d["error"] = log.error ? from_json(*log.error) : py::none();
  d["exit_status"] = log.exit_status();
  return d;
}

control::RationalTF tf(const std::vector<double>& num, const std::vector<double>& den) {
  return control::RationalTF(control::Polynomial(num), control::Polynomial(den));
}

py::tuple tf_tuple(const control::RationalTF& t) {
  return py::make_tuple(t.numerator().coefficients(), t.denominator().coefficients());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum-assisted automation and robotics simulation core";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.attr("HBAR_EV_S") = qubit::kHbarEvS;

  // rng
  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("key"))
      .def("next_u64", &RngStream::next_u64)
      .def("uniform", &RngStream::uniform)
      .def("normal", &RngStream::normal)
      .def_property_readonly("counter", &RngStream::counter);
  m.def("derive_stream_key", &derive_stream_key, py::arg("seed"), py::arg("module"),
        py::arg("index") = 0);

  // qubit
  py::class_<qubit::Qubit>(m, "Qubit")
      .def_static("ket", &qubit::Qubit::ket)
      .def_static("plus_z", &qubit::Qubit::plus_z)
      .def_static("minus_z", &qubit::Qubit::minus_z)
      .def_static("plus_x", &qubit::Qubit::plus_x)
      .def_static("minus_x", &qubit::Qubit::minus_x)
      .def_static("linear_polarization", &qubit::Qubit::linear_polarization)
      .def_property_readonly("c_plus", &qubit::Qubit::c_plus)
      .def_property_readonly("c_minus", &qubit::Qubit::c_minus);
  m.def("probability", &qubit::probability, py::arg("state"), py::arg("target"));
  m.def("rotation", &qubit::rotation, py::arg("axis"), py::arg("angle"));
  m.def(
      "measure_plus_fraction",
      [](const qubit::Qubit& state, double basis_angle, std::size_t shots, std::uint64_t seed) {
        RngStream rng = derive_stream(seed, "python.measure");
        const auto basis = qubit::MeasurementBasis::angle(basis_angle);
        std::size_t plus = 0;
        for (std::size_t i = 0; i < shots; ++i) {
          plus += qubit::measure(state, basis, rng).outcome == qubit::Outcome::Plus;
        }
        return static_cast<double>(plus) / static_cast<double>(shots);
      },
      py::arg("state"), py::arg("basis_angle"), py::arg("shots"), py::arg("seed"));

  // rigid body
  m.def("yaw_matrix", &rigid_body::yaw_matrix);
  m.def("pitch_matrix", &rigid_body::pitch_matrix);
  m.def("roll_matrix", &rigid_body::roll_matrix);
  m.def("rotation_inertial_to_body", [](double roll, double pitch, double yaw) {
    return rigid_body::rotation_inertial_to_body({roll, pitch, yaw});
  });
  m.def("euler_from_rotation", [](const rigid_body::Mat3& h) {
    const auto e = rigid_body::euler_from_rotation(h);
    return py::make_tuple(e.roll, e.pitch, e.yaw);
  });

  // bb84
  m.def(
      "bb84_session",
      [](std::size_t n, double eve_fraction, std::uint64_t seed) {
        bb84::SessionConfig c;
        c.n = n;
        if (eve_fraction > 0.0) c.channel.eve = bb84::InterceptResend{eve_fraction};
        const auto s = bb84::run_session(c, seed);
        py::dict d;
        d["sift_fraction"] = s.sift_fraction();
        d["qber"] = s.estimate.qber;
        d["verdict"] = std::string(bb84::to_string(s.verdict));
        d["alice_key"] = s.estimate.alice.bits;
        d["bob_key"] = s.estimate.bob.bits;
        return d;
      },
      py::arg("n"), py::arg("eve_fraction") = 0.0, py::arg("seed") = 0);
  m.def(
      "otp_apply",
      [](const py::bytes& message, const std::vector<std::uint8_t>& key_bits) {
        const std::string msg = message;
        const std::vector<std::uint8_t> in(msg.begin(), msg.end());
        const auto out = bb84::otp_apply(in, key_bits);
        return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
      },
      py::arg("message"), py::arg("key_bits"));
  m.def("detect_eve",
        [](double qber, double threshold) {
          return std::string(bb84::to_string(bb84::detect_eve(qber, threshold)));
        },
        py::arg("qber"), py::arg("threshold") = bb84::kDefaultQberThreshold);

  // spdc
  m.def(
      "joint_probabilities",
      [](const std::string& state, double alpha, double beta) {
        const auto p = spdc::joint_probabilities(
            spdc::TwoPhotonState::bell(spdc::parse_bell_state(state)), alpha, beta);
        return py::make_tuple(p.tt, p.tr, p.rt, p.rr);
      },
      py::arg("state"), py::arg("alpha_deg"), py::arg("beta_deg"));
  m.def("chsh", &spdc::chsh);
  m.def(
      "bell_test",
      [](const std::string& state, std::size_t pairs, std::uint64_t seed) {
        spdc::BellTestConfig c;
        c.state = spdc::TwoPhotonState::bell(spdc::parse_bell_state(state));
        c.pairs = pairs;
        const auto r = spdc::run_bell_test(c, seed);
        return py::make_tuple(r.s, r.s_sigma);
      },
      py::arg("state") = "phi+", py::arg("pairs") = 100000, py::arg("seed") = 0);

  // control
  m.def(
      "closed_loop",
      [](std::vector<double> cn, std::vector<double> cd, std::vector<double> an,
         std::vector<double> ad, std::vector<double> dn, std::vector<double> dd,
         std::vector<double> hn, std::vector<double> hd) {
        return tf_tuple(control::closed_loop(tf(cn, cd), tf(an, ad), tf(dn, dd), tf(hn, hd)));
      },
      "Each block as (num, den) coefficient lists in ascending powers of s.");
  m.def(
      "step_response",
      [](const std::vector<double>& num, const std::vector<double>& den, double duration,
         double dt) {
        std::vector<double> t, y;
        for (const auto& s : control::step_response(tf(num, den), duration, dt)) {
          t.push_back(s.t);
          y.push_back(s.y);
        }
        return py::make_tuple(t, y);
      },
      py::arg("num"), py::arg("den"), py::arg("duration"), py::arg("dt"));

  // perturbation
  m.def(
      "perturbation_benchmark",
      [](double lambda, std::size_t points) {
        perturbation::PerturbationProblem p;
        p.eigen = perturbation::EigenSystem::from_energies({0.0, 1.0});
        p.h_prime = perturbation::MatXc::Zero(2, 2);
        p.h_prime(0, 1) = p.h_prime(1, 0) = 1.0;
        p.lambda = lambda;
        std::vector<double> grid(points);
        for (std::size_t k = 0; k < points; ++k) {
          grid[k] = 10.0 * qubit::kHbarEvS * static_cast<double>(k) /
                    static_cast<double>(points - 1);
        }
        const auto r = perturbation::validate_against_ode(p, grid);
        py::dict d;
        d["max_error"] = r.max_error;
        d["error_exponent"] = r.error_exponent;
        return d;
      },
      py::arg("lambda_") = 0.01, py::arg("points") = 201);

  // scenarios
  m.def(
      "run_scenario",
      [](const std::string& text, std::optional<std::string> out_dir) {
        const auto cfg = scenario::parse_scenario_text(text);
        scenario::RunLog log;
        {
          py::gil_scoped_release release;
          log = scenario::run(cfg);
          if (out_dir) scenario::emit_plots(log, *out_dir);
        }
        return run_log_dict(log);
      },
      py::arg("scenario_json"), py::arg("out_dir") = py::none());
  m.def("json_schema", [] { return from_json(scenario::json_schema()); });
}
