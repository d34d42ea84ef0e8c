#pragma once

#include "gazetrack/config.hpp"
#include "gazetrack/dataset.hpp"
#include "gazetrack/corner.hpp"
#include "gazetrack/error.hpp"
#include "gazetrack/eval.hpp"
#include "gazetrack/gaze.hpp"
#include "gazetrack/image.hpp"
#include "gazetrack/image_io.hpp"
#include "gazetrack/iris.hpp"
#include "gazetrack/json_io.hpp"
#include "gazetrack/overlay.hpp"
#include "gazetrack/pipeline.hpp"
#include "gazetrack/stream.hpp"
#include "gazetrack/synth.hpp"
#include "gazetrack/ws_server.hpp"
