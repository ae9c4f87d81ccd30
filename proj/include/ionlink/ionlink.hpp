// Copyright 2026 The ionlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ionlink/analysis.hpp"
#include "ionlink/bsa_swap.hpp"
#include "ionlink/detection.hpp"
#include "ionlink/ion_photon.hpp"
#include "ionlink/link_protocol.hpp"
#include "ionlink/modes.hpp"
#include "ionlink/params.hpp"
#include "ionlink/quadrature.hpp"
#include "ionlink/quantum_core.hpp"
#include "ionlink/random.hpp"
#include "ionlink/rate_model.hpp"
#include "ionlink/scan.hpp"
