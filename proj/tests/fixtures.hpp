#pragma once

#include "dfcr/core_model.hpp"
#include "dfcr/validation.hpp"

namespace fx {

inline dfcr::FusionContext context() {
  return dfcr::FusionContext::from_config(dfcr::SensorConfig{}, dfcr::default_gate());
}

inline dfcr::DetectionVector radar(const dfcr::Vec2& p, double conf, double major = 20.0, double minor = 5.0) {
  dfcr::DetectionVector d;
  d.sensor = dfcr::SensorKind::Radar;
  d.confidence = conf;
  d.bbox = dfcr::BoundingBox::centered(p, major, minor);
  d.class_label = dfcr::ObjectClass::RadarContact;
  d.metadata.radar = dfcr::RadarBlob{p, major, minor};
  return d;
}

inline dfcr::DetectionVector ais(const dfcr::Vec2& p, double conf, int bow = 15, int stern = 5, int port = 3,
                                 int starboard = 3) {
  dfcr::DetectionVector d;
  d.sensor = dfcr::SensorKind::Ais;
  d.confidence = conf;
  d.bbox = dfcr::BoundingBox::centered(p, 10.0, 10.0);
  d.class_label = dfcr::ObjectClass::AisContact;
  d.metadata.ais = dfcr::AisStaticData{244000001, 70, bow, stern, port, starboard};
  return d;
}

// Optical box whose bottom centre lands on chart point p.
inline dfcr::DetectionVector optical(const dfcr::FusionContext& ctx, const dfcr::Vec2& p, double conf,
                                     dfcr::ObjectClass cls = dfcr::ObjectClass::Boat) {
  const auto px = ctx.map.to_image(p);
  dfcr::DetectionVector d;
  d.sensor = dfcr::SensorKind::Optical;
  d.confidence = conf;
  d.bbox = {px->x() - 10.0, px->y() - 8.0, px->x() + 10.0, px->y()};
  d.class_label = cls;
  return d;
}

inline void renumber(std::vector<dfcr::DetectionVector>& dets) {
  std::size_t n[3] = {0, 0, 0};
  for (auto& d : dets) d.contact_index = n[static_cast<int>(d.sensor)]++;
}

}  // namespace fx
