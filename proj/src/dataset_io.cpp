// Copyright (c) 2026 The ctxaug Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctxaug/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "ctxaug/error.hpp"
#include "ctxaug/png_io.hpp"

namespace ctxaug {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::vector<BoundingBox> ImageAnnotation::boxes() const {
  std::vector<BoundingBox> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.box);
  return out;
}

bool ImageAnnotation::has_category(std::string_view category) const {
  return std::any_of(objects.begin(), objects.end(),
                     [&](const ObjectAnnotation& o) { return o.category == category; });
}

namespace {

std::string stem_of(const std::string& filename) {
  const auto dot = filename.find_last_of('.');
  return dot == std::string::npos ? filename : filename.substr(0, dot);
}

double required_number(const pt::ptree& node, const std::string& key, const std::string& where) {
  auto v = node.get_optional<std::string>(key);
  if (!v) throw SchemaError(where + ": missing field '" + key + "'");
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    while (used < v->size() && std::isspace(static_cast<unsigned char>((*v)[used]))) ++used;
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::logic_error&) {
    throw SchemaError(where + ": field '" + key + "' is not a number");
  }
}

std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

ImageAnnotation parse_annotation(std::string_view xml) {
  pt::ptree tree;
  std::istringstream in{std::string(xml)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed annotation XML: " + e.message(), static_cast<int>(e.line()));
  }
  const auto root_opt = tree.get_child_optional("annotation");
  if (!root_opt) throw SchemaError("annotation: missing <annotation> root");
  const pt::ptree& root = *root_opt;

  ImageAnnotation ann;
  auto filename = root.get_optional<std::string>("filename");
  if (!filename) throw SchemaError("annotation: missing field 'filename'");
  ann.image_id = stem_of(trimmed(*filename));
  const double w = required_number(root, "size.width", "annotation");
  const double h = required_number(root, "size.height", "annotation");
  if (w < 1 || h < 1 || w != std::floor(w) || h != std::floor(h)) {
    throw ValidationError("annotation: image size must be positive integers");
  }
  ann.width = static_cast<int>(w);
  ann.height = static_cast<int>(h);

  int index = 0;
  for (const auto& [tag, node] : root) {
    if (tag != "object") continue;
    const std::string where = "object " + std::to_string(index);
    auto name = node.get_optional<std::string>("name");
    if (!name) throw SchemaError(where + ": missing field 'name'");
    if (!node.get_child_optional("bndbox")) throw SchemaError(where + ": missing field 'bndbox'");
    const double xmin = required_number(node, "bndbox.xmin", where);
    const double ymin = required_number(node, "bndbox.ymin", where);
    const double xmax = required_number(node, "bndbox.xmax", where);
    const double ymax = required_number(node, "bndbox.ymax", where);
    const bool difficult = trimmed(node.get<std::string>("difficult", "0")) == "1";
    if (!(xmax > xmin - 1) || !(ymax > ymin - 1)) {
      throw ValidationError(where + ": empty box");
    }
    BoundingBox box(xmin - 1, ymin - 1, xmax, ymax);
    if (!box.inside(ann.width, ann.height)) {
      throw ValidationError(where + ": box " + to_string(box) + " outside the " +
                            std::to_string(ann.width) + "x" + std::to_string(ann.height) + " image");
    }
    ann.objects.push_back({trimmed(*name), box, difficult});
    ++index;
  }
  return ann;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

long long coord(double v) { return static_cast<long long>(std::llround(v)); }

}  // namespace

std::string serialize_annotation(const ImageAnnotation& ann) {
  std::ostringstream os;
  os << "<annotation>\n"
     << "\t<folder>VOC</folder>\n"
     << "\t<filename>" << xml_escape(ann.image_id) << ".png</filename>\n"
     << "\t<size>\n"
     << "\t\t<width>" << ann.width << "</width>\n"
     << "\t\t<height>" << ann.height << "</height>\n"
     << "\t\t<depth>3</depth>\n"
     << "\t</size>\n"
     << "\t<segmented>0</segmented>\n";
  for (const auto& o : ann.objects) {
    // Integral boxes round-trip exactly; fractional ones are rounded outward.
    const long long xmin = coord(std::floor(o.box.x0())) + 1;
    const long long ymin = coord(std::floor(o.box.y0())) + 1;
    const long long xmax = coord(std::ceil(o.box.x1()));
    const long long ymax = coord(std::ceil(o.box.y1()));
    os << "\t<object>\n"
       << "\t\t<name>" << xml_escape(o.category) << "</name>\n"
       << "\t\t<difficult>" << (o.difficult ? 1 : 0) << "</difficult>\n"
       << "\t\t<bndbox>\n"
       << "\t\t\t<xmin>" << xmin << "</xmin>\n"
       << "\t\t\t<ymin>" << ymin << "</ymin>\n"
       << "\t\t\t<xmax>" << xmax << "</xmax>\n"
       << "\t\t\t<ymax>" << ymax << "</ymax>\n"
       << "\t\t</bndbox>\n"
       << "\t</object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

InstanceMaskSet decode_instance_mask(std::span<const std::uint8_t> png_bytes,
                                     const ImageAnnotation& ann) {
  return decode_instance_mask(decode_png_indices(png_bytes), ann);
}

InstanceMaskSet decode_instance_mask(const Plane<std::uint8_t>& indices, const ImageAnnotation& ann) {
  if (indices.width() != ann.width || indices.height() != ann.height) {
    throw ValidationError("instance mask is " + std::to_string(indices.width()) + "x" +
                          std::to_string(indices.height()) + ", annotation says " +
                          std::to_string(ann.width) + "x" + std::to_string(ann.height));
  }
  const int n = static_cast<int>(ann.objects.size());
  InstanceMaskSet out;
  out.masks.reserve(n);
  for (int k = 0; k < n; ++k) out.masks.emplace_back(ann.width, ann.height, 0);
  for (int y = 0; y < ann.height; ++y) {
    for (int x = 0; x < ann.width; ++x) {
      const int v = indices.at(x, y);
      if (v == 0 || v == 255) continue;
      if (v > n) throw ValidationError("unmatched instance id " + std::to_string(v));
      out.masks[v - 1].at(x, y) = 1;
    }
  }
  constexpr double kSlack = 2.0;  // loose annotation tolerance in pixels
  for (int k = 0; k < n; ++k) {
    const auto& box = ann.objects[k].box;
    std::size_t count = 0;
    for (int y = 0; y < ann.height; ++y) {
      for (int x = 0; x < ann.width; ++x) {
        if (!out.masks[k].at(x, y)) continue;
        ++count;
        if (x < box.x0() - kSlack || x + 1 > box.x1() + kSlack || y < box.y0() - kSlack ||
            y + 1 > box.y1() + kSlack) {
          throw ValidationError("instance " + std::to_string(k + 1) + " extends outside its box " +
                                to_string(box));
        }
      }
    }
    if (count == 0) throw ValidationError("empty mask for object " + std::to_string(k));
  }
  return out;
}

Plane<std::uint8_t> encode_instance_indices(const InstanceMaskSet& masks, int width, int height) {
  if (masks.masks.size() > 254) throw ValidationError("too many instances for a VOC mask");
  Plane<std::uint8_t> out(width, height, 0);
  for (std::size_t k = 0; k < masks.masks.size(); ++k) {
    const auto& m = masks.masks[k];
    if (m.width() != width || m.height() != height) throw ValidationError("mask size mismatch");
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (!m.at(x, y)) continue;
        if (out.at(x, y) != 0) throw ValidationError("instance masks overlap");
        out.at(x, y) = static_cast<std::uint8_t>(k + 1);
      }
    }
  }
  return out;
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json pastes_json = nlohmann::json::array();
  for (const auto& p : pastes) {
    pastes_json.push_back({{"source_image_id", p.source_image_id},
                           {"source_object_index", p.source_object_index},
                           {"category", p.category},
                           {"box", {p.box.x0(), p.box.y0(), p.box.x1(), p.box.y1()}},
                           {"scale", p.scale},
                           {"blend", p.blend}});
  }
  return {{"image_id", image_id}, {"seed", seed}, {"mode", mode}, {"pastes", pastes_json}};
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

WrittenPaths write_augmented(const AugmentedRecord& rec, const fs::path& out_dir) {
  const auto& ann = rec.annotation;
  if (rec.image.width() != ann.width || rec.image.height() != ann.height) {
    throw ValidationError("augmented image size does not match its annotation");
  }
  for (const auto& o : ann.objects) {
    if (!o.box.inside(ann.width, ann.height)) {
      throw ValidationError("augmented box " + to_string(o.box) + " outside the image");
    }
  }
  WrittenPaths paths{out_dir / "JPEGImages" / (ann.image_id + ".png"),
                     out_dir / "Annotations" / (ann.image_id + ".xml"),
                     out_dir / "Provenance" / (ann.image_id + ".json")};
  ensure_dir(paths.image.parent_path());
  ensure_dir(paths.annotation.parent_path());
  ensure_dir(paths.provenance.parent_path());
  write_file(paths.image, encode_png(rec.image));
  write_text(paths.annotation, serialize_annotation(ann));
  write_text(paths.provenance, rec.provenance.to_json().dump(2) + "\n");
  return paths;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path ann_dir = dir / "Annotations";
  if (!fs::is_directory(ann_dir)) throw IoError("no Annotations directory under " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ann_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Dataset out;
  out.reserve(files.size());
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    DatasetRecord rec{parse_annotation(std::string_view(
                          reinterpret_cast<const char*>(bytes.data()), bytes.size())),
                      Image{}, std::nullopt};
    const fs::path img_path = dir / "JPEGImages" / (rec.annotation.image_id + ".png");
    rec.image = to_rgb(decode_png(read_file(img_path)));
    if (rec.image.width() != rec.annotation.width || rec.image.height() != rec.annotation.height) {
      throw ValidationError(img_path.string() + ": size does not match its annotation");
    }
    const fs::path mask_path = dir / "SegmentationObject" / (rec.annotation.image_id + ".png");
    if (fs::exists(mask_path)) {
      rec.masks = decode_instance_mask(read_file(mask_path), rec.annotation);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  ensure_dir(dir / "Annotations");
  ensure_dir(dir / "JPEGImages");
  for (const auto& rec : dataset) {
    const auto& id = rec.annotation.image_id;
    write_text(dir / "Annotations" / (id + ".xml"), serialize_annotation(rec.annotation));
    write_file(dir / "JPEGImages" / (id + ".png"), encode_png(rec.image));
    if (rec.masks) {
      ensure_dir(dir / "SegmentationObject");
      write_file(dir / "SegmentationObject" / (id + ".png"),
                 encode_paletted_png(encode_instance_indices(*rec.masks, rec.annotation.width,
                                                             rec.annotation.height)));
    }
  }
}

std::vector<std::string> collect_categories(const Dataset& dataset) {
  std::set<std::string> names;
  for (const auto& rec : dataset) {
    for (const auto& o : rec.annotation.objects) names.insert(o.category);
  }
  return {names.begin(), names.end()};
}

}  // namespace ctxaug
