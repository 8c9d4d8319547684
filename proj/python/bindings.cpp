#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "pap/config.hpp"
#include "pap/error.hpp"
#include "pap/evaluate.hpp"
#include "pap/geometry.hpp"
#include "pap/grid.hpp"
#include "pap/image_io.hpp"
#include "pap/metrics.hpp"
#include "pap/mock.hpp"
#include "pap/pipeline.hpp"
#include "pap/synthetic.hpp"

namespace py = pybind11;
using namespace pap;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

Image image_from_array(const U8Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("image must be HxW or HxWxC");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  std::vector<std::uint8_t> px(a.data(), a.data() + a.size());
  return Image(w, h, c, std::move(px));
}

U8Array image_to_array(const Image& img) {
  U8Array out({img.height(), img.width(), img.channels()});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

BinaryMask mask_from_array(const BoolArray& a) {
  if (a.ndim() != 2) throw py::value_error("mask must be HxW");
  BinaryMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const bool* src = a.data();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) m.set(x, y, src[static_cast<std::size_t>(y) * m.width() + x]);
  return m;
}

BoolArray mask_to_array(const BinaryMask& m) {
  BoolArray out({m.height(), m.width()});
  bool* dst = out.mutable_data();
  const auto bits = m.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) dst[i] = bits[i] != 0;
  return out;
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

AppConfig make_config(const std::string& endpoint, const std::optional<std::string>& config_path) {
  AppConfig cfg = config_path ? load_config(*config_path) : AppConfig{};
  if (!endpoint.empty()) cfg.set_endpoint(endpoint);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_pap, m) {
  m.doc() = "Panoramic affordance prediction core";

  static py::exception<Error> pap_error(m, "PapError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = pap_error;
      py::object instance = exc(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(pap_error.ptr(), instance.ptr());
    }
  });

  py::class_<ViewportSpec>(m, "ViewportSpec")
      .def(py::init([](double yaw, double pitch, double hfov, int width, int height) {
             ViewportSpec s{yaw, pitch, hfov, width, height};
             s.validate();
             return s;
           }),
           py::arg("yaw_deg"), py::arg("pitch_deg"), py::arg("hfov_deg"), py::arg("width"), py::arg("height"))
      .def_readwrite("yaw_deg", &ViewportSpec::yaw_deg)
      .def_readwrite("pitch_deg", &ViewportSpec::pitch_deg)
      .def_readwrite("hfov_deg", &ViewportSpec::hfov_deg)
      .def_readwrite("width", &ViewportSpec::out_width_px)
      .def_readwrite("height", &ViewportSpec::out_height_px)
      .def_property_readonly("vfov_deg", &ViewportSpec::vfov_deg)
      .def("__repr__", [](const ViewportSpec& s) {
        return "ViewportSpec(yaw_deg=" + std::to_string(s.yaw_deg) + ", pitch_deg=" + std::to_string(s.pitch_deg) +
               ", hfov_deg=" + std::to_string(s.hfov_deg) + ", width=" + std::to_string(s.out_width_px) +
               ", height=" + std::to_string(s.out_height_px) + ")";
      });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](int cols, int rows, int line_width, int font_size) {
             GridSpec g{cols, rows, line_width, font_size};
             g.validate();
             return g;
           }),
           py::arg("cols") = 4, py::arg("rows") = 3, py::arg("line_width_px") = 5, py::arg("font_size_px") = 50)
      .def_readonly("cols", &GridSpec::cols)
      .def_readonly("rows", &GridSpec::rows)
      .def_readonly("line_width_px", &GridSpec::line_width_px)
      .def_readonly("font_size_px", &GridSpec::font_size_px);

  py::class_<CropRegion>(m, "CropRegion")
      .def_readonly("x0", &CropRegion::x0)
      .def_readonly("y0", &CropRegion::y0)
      .def_readonly("width", &CropRegion::width)
      .def_readonly("height", &CropRegion::height)
      .def_readonly("wraps_seam", &CropRegion::wraps_seam)
      .def_property_readonly("erp_x0", &CropRegion::erp_x0)
      .def_property_readonly("erp_x1", &CropRegion::erp_x1)
      .def_property_readonly("erp_y0", &CropRegion::erp_y0)
      .def_property_readonly("erp_y1", &CropRegion::erp_y1);

  m.def(
      "extract_viewport", [](const U8Array& erp, const ViewportSpec& spec) {
        return image_to_array(extract_viewport(image_from_array(erp), spec));
      },
      py::arg("erp"), py::arg("spec"), "Rectilinear view of an ERP image (HxWxC uint8).");
  m.def(
      "viewport_to_erp",
      [](double x, double y, const ViewportSpec& s, int w, int h) {
        const ErpPoint p = viewport_to_erp(x, y, s, {w, h});
        return py::make_tuple(p.u, p.v);
      },
      py::arg("x"), py::arg("y"), py::arg("spec"), py::arg("erp_width"), py::arg("erp_height"));
  m.def(
      "erp_to_viewport",
      [](double u, double v, const ViewportSpec& s, int w, int h) -> py::object {
        const auto p = erp_to_viewport(u, v, s, {w, h});
        if (!p) return py::none();
        return py::make_tuple(p->x, p->y);
      },
      py::arg("u"), py::arg("v"), py::arg("spec"), py::arg("erp_width"), py::arg("erp_height"));
  m.def(
      "reproject_mask_to_erp",
      [](const BoolArray& mask, const ViewportSpec& s, int w, int h) {
        return mask_to_array(reproject_mask_to_erp(mask_from_array(mask), s, {w, h}));
      },
      py::arg("mask"), py::arg("spec"), py::arg("erp_width"), py::arg("erp_height"));
  m.def(
      "project_mask_to_viewport",
      [](const BoolArray& mask, const ViewportSpec& s) {
        return mask_to_array(project_mask_to_viewport(mask_from_array(mask), s));
      },
      py::arg("erp_mask"), py::arg("spec"));

  m.def(
      "cell_region", [](int index, const GridSpec& g, int w, int h) { return cell_region(index, g, w, h); },
      py::arg("index"), py::arg("grid"), py::arg("width"), py::arg("height"));
  m.def(
      "merge_cells",
      [](const std::vector<int>& cells, const GridSpec& g, int w, int h) { return merge_cells(cells, g, w, h); },
      py::arg("cells"), py::arg("grid"), py::arg("width"), py::arg("height"));
  m.def(
      "render_grid_overlay",
      [](const U8Array& img, const GridSpec& g) { return image_to_array(render_grid_overlay(image_from_array(img), g)); },
      py::arg("image"), py::arg("grid") = GridSpec{});

  m.def(
      "iou", [](const BoolArray& a, const BoolArray& b) { return iou(mask_from_array(a), mask_from_array(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "summarize",
      [](const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
        std::vector<SampleScore> s;
        for (const auto& [inter, uni] : pairs) {
          if (inter > uni) throw py::value_error("intersection exceeds union");
          s.push_back({"", inter, uni, uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni), {}});
        }
        return to_py(to_json(summarize(s)));
      },
      py::arg("pairs"), "Metrics over (intersection, union) pairs.");
  m.def(
      "classify_difficulty",
      [](const BoolArray& gt) { return std::string(to_string(classify_difficulty(mask_from_array(gt)))); },
      py::arg("gt_mask"));

  m.def(
      "read_image", [](const std::filesystem::path& p) { return image_to_array(io::read_image(p)); }, py::arg("path"));
  m.def(
      "read_mask", [](const std::filesystem::path& p) { return mask_to_array(io::read_mask(p)); }, py::arg("path"));

  m.def(
      "write_synthetic_dataset",
      [](const std::filesystem::path& dir, int count, std::uint64_t seed) {
        std::vector<std::string> ids;
        for (const auto& r : write_synthetic_dataset(dir, make_synthetic_scenes(count, seed))) ids.push_back(r.id);
        return ids;
      },
      py::arg("directory"), py::arg("count") = 30, py::arg("seed") = 2024);

  m.def(
      "predict",
      [](const U8Array& erp, const std::string& task, const std::string& endpoint,
         const std::optional<std::string>& config, const std::string& image_id) {
        const AppConfig cfg = make_config(endpoint, config);
        const Image img = image_from_array(erp);
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(img, task, Backends::connect(cfg.vlm, cfg.ovd, cfg.sam), cfg.pipeline,
                           RequestContext{image_id});
        }
        py::dict out;
        out["mask"] = mask_to_array(r.mask_erp);
        out["view_mask"] = mask_to_array(r.mask_persp);
        out["view_image"] = image_to_array(r.view_image);
        out["summary"] = to_py(result_summary(r));
        out["routing"] = to_py(routing_to_json(*r.routing));
        out["view"] = to_py(view_to_json(*r.view));
        return out;
      },
      py::arg("erp"), py::arg("task"), py::arg("endpoint") = "", py::arg("config") = py::none(),
      py::arg("image_id") = "", "Run the full pipeline on one panorama.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& dataset, const std::string& endpoint, const std::optional<std::string>& config,
         int workers, const std::optional<std::string>& subset, const std::optional<std::filesystem::path>& report_dir) {
        const AppConfig cfg = make_config(endpoint, config);
        EvalOptions opts{workers, std::nullopt};
        if (subset) opts.subset = difficulty_from_string(*subset);
        Evaluation e;
        {
          py::gil_scoped_release release;
          e = evaluate_dataset(dataset, Backends::connect(cfg.vlm, cfg.ovd, cfg.sam), cfg.pipeline, opts);
          if (report_dir) write_evaluation(*report_dir, e);
        }
        return to_py(to_json(e.report));
      },
      py::arg("dataset"), py::arg("endpoint") = "", py::arg("config") = py::none(), py::arg("workers") = 0,
      py::arg("subset") = py::none(), py::arg("report_dir") = py::none());

  py::class_<MockServer>(m, "MockServer")
      .def(py::init([](const std::filesystem::path& dataset, double noise_p, double jitter, const std::string& sam,
                       std::uint64_t seed) {
             MockOptions o;
             o.grid_noise_p = noise_p;
             o.jitter_px = jitter;
             if (sam != "oracle" && sam != "rect") throw py::value_error("sam must be 'oracle' or 'rect'");
             o.sam_mode = sam == "rect" ? MockOptions::SamMode::kRectangle : MockOptions::SamMode::kOracle;
             o.seed = seed;
             return std::make_unique<MockServer>(dataset, o);
           }),
           py::arg("dataset"), py::arg("noise_p") = 0.0, py::arg("jitter") = 0.0, py::arg("sam") = "oracle",
           py::arg("seed") = 0)
      .def("start", &MockServer::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           "Serve on a background thread; returns the bound port.")
      .def("stop", &MockServer::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &MockServer::port);
}
