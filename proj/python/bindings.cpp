// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "agrgan/checkpoint.hpp"
#include "agrgan/dataset.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/evaluation.hpp"
#include "agrgan/metrics.hpp"
#include "agrgan/training.hpp"

namespace py = pybind11;
using namespace agrgan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from_data(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

metrics::ScoreSet scores(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  return {genuine, impostor};
}

py::dict aging_dict(const AgingReport& r) {
  py::dict d;
  d["mean_predicted"] = std::vector<double>(r.mean_predicted.begin(), r.mean_predicted.end());
  d["samples_per_group"] = r.samples_per_group;
  d["increasing_pairs"] = r.increasing_pairs;
  d["spearman"] = r.spearman;
  d["spread"] = r.spread;
  return d;
}

py::dict identity_dict(const IdentityReport& r) {
  py::dict d;
  d["eer"] = std::vector<double>(r.eer.begin(), r.eer.end());
  d["mean_eer"] = r.mean_eer;
  d["genuine_pairs"] = r.genuine_pairs;
  d["impostor_pairs"] = r.impostor_pairs;
  return d;
}

py::dict verification_dict(const VerificationReport& r) {
  py::dict d;
  d["baseline_eer"] = r.baseline_eer;
  d["agr_eer"] = r.agr_eer;
  d["baseline_tpr"] = r.baseline_tpr;
  d["agr_tpr"] = r.agr_tpr;
  d["baseline_rank1"] = r.baseline_rank1;
  d["agr_rank1"] = r.agr_rank1;
  d["operating_fpr"] = r.operating_fpr;
  d["identities_used"] = r.identities_used;
  d["identities_skipped"] = r.identities_skipped;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "AGR-GAN core: synthetic data, networks, training and evaluation";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.attr("AGE_GROUPS") = kAgeGroups;

  // Labels -----------------------------------------------------------------
  m.def("age_to_group", &age_to_group, py::arg("age_years"));
  m.def(
      "encode_condition",
      [](std::size_t group, std::size_t gender) {
        auto c = encode_condition(group, gender);
        return c.flat();
      },
      py::arg("group"), py::arg("gender"), "12-element one-hot vector: 10 age bits then 2 gender bits.");
  m.def(
      "decode_condition",
      [](const std::vector<double>& flat) {
        if (flat.size() != kConditionDim) throw ArgumentError("condition vector must have 12 entries");
        ConditionVector c;
        std::copy(flat.begin(), flat.begin() + kAgeGroups, c.age_onehot.begin());
        std::copy(flat.begin() + kAgeGroups, flat.end(), c.gender_onehot.begin());
        return decode_condition(c);
      },
      py::arg("vector"));
  m.def(
      "normalize", [](const Array& raw) { return to_numpy(Tensor::from_data({static_cast<std::size_t>(raw.size())},
                                                                            normalize({raw.data(), static_cast<std::size_t>(raw.size())}))); },
      py::arg("raw"), "[0, 255] -> [-1, 1], flattened.");
  m.def(
      "denormalize", [](const Array& v) { return to_numpy(Tensor::from_data({static_cast<std::size_t>(v.size())},
                                                                          denormalize({v.data(), static_cast<std::size_t>(v.size())}))); },
      py::arg("values"), "[-1, 1] -> [0, 255], flattened.");

  // Data -------------------------------------------------------------------
  py::class_<Dataset>(m, "Dataset")
      .def_readonly("image_size", &Dataset::image_size)
      .def("__len__", &Dataset::size)
      .def("identities", &Dataset::identities)
      .def("group_histogram", &Dataset::group_histogram)
      .def("images", [](const Dataset& d) { return to_numpy(image_batch(d)); }, "All images as [N, 3, S, S].")
      .def("labels",
           [](const Dataset& d) {
             std::vector<std::size_t> ids, groups, genders;
             std::vector<double> ages;
             for (const auto& s : d.samples) {
               ids.push_back(s.identity);
               ages.push_back(s.age_years);
               groups.push_back(s.age_group());
               genders.push_back(s.gender);
             }
             py::dict out;
             out["identity"] = ids;
             out["age"] = ages;
             out["group"] = groups;
             out["gender"] = genders;
             return out;
           })
      .def("write", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(d, dir); }, py::arg("dir"));

  m.def("generate_synthetic", &generate_synthetic, py::arg("identities"), py::arg("per_identity"), py::arg("seed"),
        py::arg("size") = 32);
  m.def("read_dataset", &read_dataset, py::arg("dir"));
  m.def("split_by_identity", &split_by_identity, py::arg("dataset"), py::arg("train_fraction"), py::arg("seed"));

  // Networks ---------------------------------------------------------------
  py::class_<ScaleProfile>(m, "ScaleProfile")
      .def_static("desk", &ScaleProfile::desk)
      .def_static("paper", &ScaleProfile::paper)
      .def_static("by_name", &ScaleProfile::by_name)
      .def_readwrite("name", &ScaleProfile::name)
      .def_readwrite("image_size", &ScaleProfile::image_size)
      .def_readwrite("enc_dim", &ScaleProfile::enc_dim)
      .def_readwrite("repr_blocks", &ScaleProfile::repr_blocks)
      .def_readwrite("gen_blocks", &ScaleProfile::gen_blocks)
      .def_readwrite("dface_blocks", &ScaleProfile::dface_blocks)
      .def_readwrite("base_channels", &ScaleProfile::base_channels)
      .def("validate", &ScaleProfile::validate)
      .def("__eq__", [](const ScaleProfile& a, const ScaleProfile& b) { return a == b; })
      .def("__repr__", [](const ScaleProfile& p) {
        return "ScaleProfile('" + p.name + "', image_size=" + std::to_string(p.image_size) + ")";
      });

  py::class_<EmbeddingNet>(m, "EmbeddingNet")
      .def("embed", [](const EmbeddingNet& net, const Array& images) {
        NoGradGuard guard;
        return to_numpy(net.forward(from_numpy(images)));
      });

  py::class_<AgrGan>(m, "AgrGan")
      .def(py::init<const ScaleProfile&, std::uint64_t>(), py::arg("profile"), py::arg("seed"))
      .def_readonly("profile", &AgrGan::profile)
      .def(
          "transform",
          [](AgrGan& model, const Array& images, const std::vector<std::size_t>& groups,
             const std::vector<std::size_t>& genders) {
            if (groups.size() != genders.size()) throw ArgumentError("one gender per target group required");
            std::vector<ConditionVector> conds;
            for (std::size_t i = 0; i < groups.size(); ++i) conds.push_back(encode_condition(groups[i], genders[i]));
            Tensor x = from_numpy(images);
            NoGradGuard guard;
            return to_numpy(model.transform(x, condition_batch(conds)));
          },
          py::arg("images"), py::arg("groups"), py::arg("genders"), "G(R(x), group, gender) for a [N, 3, S, S] batch.")
      .def(
          "encode",
          [](AgrGan& model, const Array& images) {
            NoGradGuard guard;
            return to_numpy(model.representor.forward(from_numpy(images), false));
          },
          py::arg("images"))
      .def(
          "estimate_age_logits",
          [](AgrGan& model, const Array& images) {
            NoGradGuard guard;
            return to_numpy(model.age_estimator.forward(from_numpy(images)));
          },
          py::arg("images"))
      .def("save", [](AgrGan& model, const std::filesystem::path& p) { save_agrgan(model, p); }, py::arg("path"))
      .def("load_into", [](AgrGan& model, const std::filesystem::path& p) { load_into(model, p); }, py::arg("path"));
  m.def("load_checkpoint", &load_agrgan, py::arg("path"));

  // Training ---------------------------------------------------------------
  py::class_<LossWeights>(m, "LossWeights")
      .def(py::init<>())
      .def(py::init([](double id, double agegap, double tv, double adv_face, double adv_enc) {
             return LossWeights{id, agegap, tv, adv_face, adv_enc};
           }),
           py::arg("id") = 1.0, py::arg("agegap") = 1.0, py::arg("tv") = 1.0, py::arg("adv_face") = 1.0,
           py::arg("adv_enc") = 1.0)
      .def_readwrite("id", &LossWeights::id)
      .def_readwrite("agegap", &LossWeights::agegap)
      .def_readwrite("tv", &LossWeights::tv)
      .def_readwrite("adv_face", &LossWeights::adv_face)
      .def_readwrite("adv_enc", &LossWeights::adv_enc);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_static("defaults_for", &TrainConfig::defaults_for)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("profile", &TrainConfig::profile)
      .def_readwrite("weights", &TrainConfig::weights)
      .def_readwrite("d_steps", &TrainConfig::d_steps)
      .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
      .def("validate", &TrainConfig::validate);

  m.def("train_phi", [](const Dataset& train, std::uint64_t seed) { return train_phi(train, seed); },
        py::arg("train"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "train",
      [](AgrGan& model, const EmbeddingNet& phi, const TrainConfig& config, const Dataset& data,
         const std::filesystem::path& out_dir, const std::map<std::string, std::string>& notes) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = agrgan::train(model, phi, config, data, out_dir, notes);
        }
        Array history({static_cast<py::ssize_t>(r.history.size()), py::ssize_t{9}});
        double* h = history.mutable_data();
        for (const auto& s : r.history) {
          for (double v : {s.d_face, s.d_enc, s.est, s.g_adv_face, s.g_adv_enc, s.id, s.agegap, s.tv, s.total}) {
            *h++ = v;
          }
        }
        py::dict out;
        out["checkpoints"] = r.checkpoints;
        out["manifest"] = r.manifest;
        out["loss_csv"] = r.loss_csv;
        out["steps_per_epoch"] = r.steps_per_epoch;
        out["history"] = history;
        return out;
      },
      py::arg("model"), py::arg("phi"), py::arg("config"), py::arg("data"), py::arg("out_dir"),
      py::arg("notes") = std::map<std::string, std::string>{},
      "Trains in place. history columns: d_face, d_enc, est, g_adv_face, g_adv_enc, id, agegap, tv, total.");

  // Evaluation -------------------------------------------------------------
  py::class_<OracleModels>(m, "Oracles")
      .def_readonly("phi", &OracleModels::phi)
      .def_readonly("verifier", &OracleModels::verifier)
      .def_property_readonly("report",
                             [](const OracleModels& o) {
                               py::dict d;
                               d["age_exact"] = o.report.age_exact;
                               d["age_within_one"] = o.report.age_within_one;
                               d["phi_auc"] = o.report.phi_auc;
                               d["verifier_auc"] = o.report.verifier_auc;
                               return d;
                             })
      .def("save", [](OracleModels& o, const std::filesystem::path& p) { save_oracles(o, p); }, py::arg("path"))
      .def_static(
          "load", [](const std::filesystem::path& p, std::size_t size) { return load_oracles(p, size); },
          py::arg("path"), py::arg("image_size") = 32);
  m.def("pretrain_oracles",
        [](const Dataset& train, const Dataset& heldout, std::uint64_t seed) {
          return pretrain_oracles(train, heldout, seed);
        },
        py::arg("train"), py::arg("heldout"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("aging_eval", [](AgrGan& model, const Dataset& eval, const OracleModels& o) {
    return aging_dict(aging_model_eval(model, eval, o));
  });
  m.def("identity_eval", [](AgrGan& model, const Dataset& eval, const OracleModels& o) {
    return identity_dict(identity_preservation_eval(model, eval, o));
  });
  m.def(
      "verification_eval",
      [](AgrGan& model, const Dataset& eval, const OracleModels& o, bool self_projection) {
        return verification_dict(verification_gain_eval(model, eval, o, self_projection));
      },
      py::arg("model"), py::arg("eval"), py::arg("oracles"), py::arg("self_projection") = false);
  m.def("output_diversity", &output_diversity, py::arg("model"), py::arg("eval"), py::arg("max_inputs") = 200);

  // Metrics ----------------------------------------------------------------
  m.def("compute_eer", [](const std::vector<double>& g, const std::vector<double>& i) {
    return metrics::compute_eer(scores(g, i));
  }, py::arg("genuine"), py::arg("impostor"));
  m.def("roc_curve", [](const std::vector<double>& g, const std::vector<double>& i) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : metrics::roc_curve(scores(g, i))) out.emplace_back(p.fpr, p.tpr);
    return out;
  }, py::arg("genuine"), py::arg("impostor"), "List of (fpr, tpr) from (0, 0) to (1, 1).");
  m.def("roc_auc", [](const std::vector<double>& g, const std::vector<double>& i) {
    auto c = metrics::roc_curve(scores(g, i));
    return metrics::roc_auc(c);
  }, py::arg("genuine"), py::arg("impostor"));
  m.def("tpr_at_fpr", [](const std::vector<double>& g, const std::vector<double>& i, double fpr) {
    return metrics::tpr_at_fpr(scores(g, i), fpr);
  }, py::arg("genuine"), py::arg("impostor"), py::arg("fpr"));
  m.def("rank1_accuracy", [](const std::vector<std::vector<double>>& sim, const std::vector<std::size_t>& probe,
                             const std::vector<std::size_t>& gallery) {
    return metrics::rank1_accuracy(sim, probe, gallery);
  }, py::arg("similarity"), py::arg("probe_ids"), py::arg("gallery_ids"));
}
