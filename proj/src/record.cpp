#include "hdpo/record.hpp"

#include "hdpo/error.hpp"

namespace hdpo {

std::string_view category_name(HallucinationCategory c) noexcept {
  switch (c) {
    case HallucinationCategory::Object: return "Object";
    case HallucinationCategory::Number: return "Number";
    case HallucinationCategory::Location: return "Location";
    case HallucinationCategory::Color: return "Color";
    case HallucinationCategory::StaticRelation: return "StaticRelation";
    case HallucinationCategory::OCR: return "OCR";
    case HallucinationCategory::Action: return "Action";
    case HallucinationCategory::DynamicAttribute: return "DynamicAttribute";
    case HallucinationCategory::DynamicRelation: return "DynamicRelation";
    case HallucinationCategory::Sequence: return "Sequence";
  }
  return "?";
}

std::string_view dimension_name(HallucinationDimension d) noexcept {
  return d == HallucinationDimension::Perception ? "Perception" : "Temporal";
}

std::optional<HallucinationCategory> parse_category(std::string_view name) noexcept {
  for (auto c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

nlohmann::ordered_json annotation_to_json(const AnnotationRecord& rec) {
  nlohmann::ordered_json keyframes = nlohmann::ordered_json::array();
  for (const auto& kf : rec.keyframes) {
    nlohmann::ordered_json objects = nlohmann::ordered_json::array();
    for (const auto& o : kf.objects) {
      objects.push_back({{"label", o.label}, {"bbox", {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}}});
    }
    keyframes.push_back({{"frame_idx", kf.frame_idx}, {"objects", std::move(objects)}});
  }
  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (const auto& s : rec.segments) {
    segments.push_back({{"start", s.start}, {"end", s.end}, {"label", s.label}});
  }
  nlohmann::ordered_json j;
  j["video_id"] = rec.video_id;
  j["category"] = category_name(rec.category);
  j["question"] = rec.question;
  j["chosen"] = rec.chosen;
  j["rejected_relevant"] = rec.rejected_relevant;
  j["rejected_irrelevant"] = rec.rejected_irrelevant;
  j["keyframes"] = std::move(keyframes);
  j["segments"] = std::move(segments);
  return j;
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, std::string_view name,
                            const std::string& where) {
  auto it = j.find(name);
  if (it == j.end()) throw InvalidInput("missing field \"" + where + std::string(name) + "\"");
  return *it;
}

template <class T>
T typed(const nlohmann::json& j, std::string_view name, const std::string& where = "") {
  const auto& v = field(j, name, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput("field \"" + where + std::string(name) + "\" has the wrong type");
  }
}

}  // namespace

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("record is not a JSON object");
  AnnotationRecord rec;
  rec.video_id = typed<std::string>(j, "video_id");
  const auto cat = typed<std::string>(j, "category");
  if (auto c = parse_category(cat)) {
    rec.category = *c;
  } else {
    throw InvalidInput("field \"category\" has unknown value '" + cat + "'");
  }
  rec.question = typed<std::string>(j, "question");
  rec.chosen = typed<std::string>(j, "chosen");
  rec.rejected_relevant = typed<std::string>(j, "rejected_relevant");
  rec.rejected_irrelevant = typed<std::string>(j, "rejected_irrelevant");
  const auto& kfs = field(j, "keyframes", "");
  if (!kfs.is_array()) throw InvalidInput("field \"keyframes\" must be an array");
  for (const auto& kf : kfs) {
    Keyframe k;
    k.frame_idx = typed<int>(kf, "frame_idx", "keyframes.");
    const auto& objs = field(kf, "objects", "keyframes.");
    if (!objs.is_array()) throw InvalidInput("field \"keyframes.objects\" must be an array");
    for (const auto& o : objs) {
      KeyframeObject ko;
      ko.label = typed<std::string>(o, "label", "keyframes.objects.");
      const auto box = typed<std::vector<double>>(o, "bbox", "keyframes.objects.");
      if (box.size() != 4) throw InvalidInput("field \"keyframes.objects.bbox\" must hold 4 numbers");
      ko.bbox = {box[0], box[1], box[2], box[3]};
      k.objects.push_back(std::move(ko));
    }
    rec.keyframes.push_back(std::move(k));
  }
  const auto& segs = field(j, "segments", "");
  if (!segs.is_array()) throw InvalidInput("field \"segments\" must be an array");
  for (const auto& s : segs) {
    rec.segments.push_back({typed<int>(s, "start", "segments."), typed<int>(s, "end", "segments."),
                            typed<std::string>(s, "label", "segments.")});
  }
  return rec;
}

}  // namespace hdpo
