/*
 * Copyright 2026 The M3DN Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "m3dn/dataset.h"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "m3dn/status.h"
#include "json.hpp"

namespace m3dn {
namespace {

using Json = nlohmann::ordered_json;

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string RowName(const Example& e, size_t index) {
  return "row " + std::to_string(index) + " ('" + e.id + "')";
}

Json BagToJson(const Bag& bag) {
  Json rows = Json::array();
  for (Eigen::Index j = 0; j < bag.instances.cols(); ++j) {
    Json inst = Json::array();
    for (Eigen::Index i = 0; i < bag.instances.rows(); ++i)
      inst.push_back(bag.instances(i, j));
    rows.push_back(std::move(inst));
  }
  return rows;
}

Bag BagFromJson(const Json& j, int modality, const std::string& id,
                int line) {
  auto fail = [line](const std::string& msg) {
    return Error(ErrorCode::kParseError,
                 "line " + std::to_string(line) + ": " + msg);
  };
  if (!j.is_array() || j.empty()) throw fail("bag must be a nonempty array");
  const size_t d = j.front().is_array() ? j.front().size() : 0;
  if (d == 0) throw fail("instances must be nonempty arrays");
  Bag bag;
  bag.modality = modality;
  bag.bag_id = id + ":m" + std::to_string(modality);
  bag.instances.resize(static_cast<Eigen::Index>(d),
                       static_cast<Eigen::Index>(j.size()));
  for (size_t c = 0; c < j.size(); ++c) {
    const Json& inst = j[c];
    if (!inst.is_array() || inst.size() != d) {
      throw Error(ErrorCode::kDimensionInconsistency,
                  "line " + std::to_string(line) +
                      ": instances of a bag differ in length");
    }
    for (size_t r = 0; r < d; ++r) {
      if (!inst[r].is_number()) throw fail("feature values must be numbers");
      bag.instances(static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(c)) = inst[r].get<double>();
    }
  }
  return bag;
}

}  // namespace

int M3Dataset::labeled_count() const {
  int n = 0;
  for (const auto& e : examples) n += e.labels.has_value();
  return n;
}

int M3Dataset::unlabeled_count() const {
  return static_cast<int>(examples.size()) - labeled_count();
}

M3Dataset M3Dataset::Subset(const std::string& split) const {
  std::vector<Example> rows;
  for (const auto& e : examples)
    if (e.split == split) rows.push_back(e);
  return WithExamples(std::move(rows));
}

M3Dataset M3Dataset::WithExamples(std::vector<Example> rows) const {
  M3Dataset out;
  out.label_count = label_count;
  out.d1 = d1;
  out.d2 = d2;
  out.label_names = label_names;
  out.examples = std::move(rows);
  return out;
}

void ValidateDataset(const M3Dataset& data) {
  auto bad = [](const std::string& msg) {
    return Error(ErrorCode::kDimensionInconsistency, msg);
  };
  if (data.label_count < 2) throw bad("label_count must be >= 2");
  if (data.d1 < 1 || data.d2 < 1) throw bad("feature dimensions must be >= 1");
  if (static_cast<int>(data.label_names.size()) != data.label_count)
    throw bad("expected one label name per label");
  for (size_t k = 0; k < data.examples.size(); ++k) {
    const Example& e = data.examples[k];
    if (e.bag_count() == 0) throw bad(RowName(e, k) + " has no bag");
    if (e.m1 && (e.m1->feature_dim() != data.d1 || e.m1->instance_count() < 1))
      throw bad(RowName(e, k) + " modality 1 has dimension " +
                std::to_string(e.m1->feature_dim()) + ", header says " +
                std::to_string(data.d1));
    if (e.m2 && (e.m2->feature_dim() != data.d2 || e.m2->instance_count() < 1))
      throw bad(RowName(e, k) + " modality 2 has dimension " +
                std::to_string(e.m2->feature_dim()) + ", header says " +
                std::to_string(data.d2));
    if (e.labels) {
      if (static_cast<int>(e.labels->size()) != data.label_count)
        throw bad(RowName(e, k) + " has " + std::to_string(e.labels->size()) +
                  " labels, header says " + std::to_string(data.label_count));
      for (int y : *e.labels)
        if (y != 0 && y != 1) throw bad(RowName(e, k) + " has a non-binary label");
    }
  }
}

std::string SerializeDataset(const M3Dataset& data) {
  ValidateDataset(data);
  std::string out;
  Json header;
  header["version"] = kDatasetVersion;
  header["L"] = data.label_count;
  header["d_1"] = data.d1;
  header["d_2"] = data.d2;
  header["label_names"] = data.label_names;
  out += header.dump();
  out += '\n';
  for (const Example& e : data.examples) {
    Json row;
    row["id"] = e.id;
    Json bags = Json::object();
    if (e.m1) bags["m1"] = BagToJson(*e.m1);
    if (e.m2) bags["m2"] = BagToJson(*e.m2);
    row["bags"] = std::move(bags);
    if (e.labels) row["labels"] = *e.labels;
    if (!e.split.empty()) row["split"] = e.split;
    out += row.dump();
    out += '\n';
  }
  return out;
}

M3Dataset ParseDataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  M3Dataset data;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      if (!have_header) {
        if (!j.contains("version"))
          throw Error(ErrorCode::kParseError, where + "missing header");
        const int version = j.at("version").get<int>();
        if (version != kDatasetVersion)
          throw Error(ErrorCode::kSchemaVersionMismatch,
                      where + "dataset version " + std::to_string(version) +
                          ", reader supports " +
                          std::to_string(kDatasetVersion));
        data.label_count = j.at("L").get<int>();
        data.d1 = j.at("d_1").get<int>();
        data.d2 = j.at("d_2").get<int>();
        data.label_names = j.at("label_names").get<std::vector<std::string>>();
        have_header = true;
        continue;
      }
      Example e;
      e.id = j.at("id").get<std::string>();
      const Json& bags = j.at("bags");
      if (!bags.is_object())
        throw Error(ErrorCode::kParseError, where + "bags must be an object");
      if (bags.contains("m1")) e.m1 = BagFromJson(bags["m1"], 1, e.id, line_no);
      if (bags.contains("m2")) e.m2 = BagFromJson(bags["m2"], 2, e.id, line_no);
      if (j.contains("labels")) e.labels = j["labels"].get<std::vector<int>>();
      if (j.contains("split")) e.split = j["split"].get<std::string>();
      data.examples.push_back(std::move(e));
      // Row-level checks name the line rather than the row index.
      try {
        ValidateDataset(data.WithExamples({data.examples.back()}));
      } catch (const Error& err) {
        throw Error(err.code(), where + err.detail());
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, where + e.what());
    }
  }
  Require(have_header, ErrorCode::kParseError, "missing header line");
  ValidateDataset(data);
  return data;
}

std::string ReadFileBytes(const std::string& path) {
  if (EndsWith(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    Require(f != nullptr, ErrorCode::kIoError, "cannot open '" + path + "'");
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, n);
    const bool ok = n == 0;
    gzclose(f);
    Require(ok, ErrorCode::kIoError, "cannot decompress '" + path + "'");
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  // Write to a sibling temporary and rename, so readers never see a
  // partially written file.
  const std::string tmp = path + ".tmp";
  bool ok = false;
  if (EndsWith(path, ".gz")) {
    // gzopen writes a header without name or mtime, so output is
    // reproducible.
    gzFile f = gzopen(tmp.c_str(), "wb9");
    if (f != nullptr) {
      ok = bytes.empty() ||
           gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) ==
               static_cast<int>(bytes.size());
      ok = gzclose(f) == Z_OK && ok;
    }
  } else {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out.good()) {
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.close();
      ok = out.good();
    }
  }
  std::error_code ec;
  if (ok) std::filesystem::rename(tmp, path, ec);
  if (!ok || ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  }
}

M3Dataset ReadDataset(const std::string& path) {
  return ParseDataset(ReadFileBytes(path));
}

void WriteDataset(const M3Dataset& data, const std::string& path) {
  WriteFileBytes(path, SerializeDataset(data));
}

}  // namespace m3dn
