// Copyright 2026 The qest Authors
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

#include "qest/bounds.hpp"
#include "qest/clt.hpp"
#include "qest/collective.hpp"
#include "qest/errors.hpp"
#include "qest/estimation.hpp"
#include "qest/experiment.hpp"
#include "qest/fisher.hpp"
#include "qest/fock.hpp"
#include "qest/gaussian.hpp"
#include "qest/io.hpp"
#include "qest/linalg.hpp"
#include "qest/models.hpp"
#include "qest/parallel.hpp"
#include "qest/qcore.hpp"
