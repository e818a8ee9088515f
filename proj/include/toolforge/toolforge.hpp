// Copyright 2026 The ToolForge Authors.
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

#pragma once

#include "toolforge/value.hpp"
#include "toolforge/invocation.hpp"
#include "toolforge/schema.hpp"
#include "toolforge/conversation.hpp"
#include "toolforge/alignment.hpp"
#include "toolforge/model.hpp"
#include "toolforge/http_model.hpp"
#include "toolforge/difficulty.hpp"
#include "toolforge/inference.hpp"
#include "toolforge/eval.hpp"
#include "toolforge/curation.hpp"
#include "toolforge/pipeline.hpp"
