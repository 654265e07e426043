//! JSON Schemas for request and response bodies, served at `/v1/schema`.

use serde_json::{json, Value};

fn span() -> Value {
    json!({
        "type": "object",
        "required": ["doc_id", "start", "end", "category", "text"],
        "properties": {
            "doc_id": {"type": "string"},
            "start": {"type": "integer", "minimum": 0},
            "end": {"type": "integer", "minimum": 0},
            "category": {"$ref": "#/definitions/category"},
            "text": {"type": "string"}
        }
    })
}

fn document() -> Value {
    json!({
        "type": "object",
        "required": ["id", "kind", "text", "thread_id"],
        "properties": {
            "id": {"type": "string"},
            "kind": {"enum": ["title", "body", "comment"]},
            "text": {"type": "string"},
            "thread_id": {"type": "string"},
            "parent_id": {"type": ["string", "null"]}
        }
    })
}

pub fn schemas() -> Value {
    let categories: Vec<&str> = disclose_core::Category::ALL.iter().map(|c| c.as_str()).collect();
    json!({
        "definitions": {
            "category": {"enum": categories},
            "span": span(),
            "document": document(),
            "importance": {"enum": ["Low", "Moderate", "High"]},
            "strategy": {"enum": ["sampling", "end_to_end", "iterative"]}
        },
        "detect_request": {
            "type": "object",
            "description": "Exactly one of text or thread. Query ?rate=true adds importance ratings.",
            "properties": {
                "text": {"type": "string"},
                "thread": {
                    "type": "object",
                    "required": ["thread_id", "documents"],
                    "properties": {
                        "thread_id": {"type": "string"},
                        "documents": {"type": "array", "items": {"$ref": "#/definitions/document"}}
                    }
                }
            }
        },
        "detect_response": {
            "type": "object",
            "required": ["spans", "model_versions"],
            "properties": {
                "spans": {"type": "array", "items": {"$ref": "#/definitions/span"}},
                "ratings": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "level": {"$ref": "#/definitions/importance"},
                            "rationale": {"type": ["string", "null"]}
                        }
                    }
                },
                "model_versions": {"type": "object", "additionalProperties": {"type": "string"}}
            }
        },
        "abstract_request": {
            "type": "object",
            "required": ["text", "span_start", "span_end"],
            "properties": {
                "text": {"type": "string"},
                "span_start": {"type": "integer", "minimum": 0},
                "span_end": {"type": "integer", "minimum": 0},
                "strategy": {"$ref": "#/definitions/strategy"},
                "category": {"$ref": "#/definitions/category"},
                "with_thought": {"type": "boolean"}
            }
        },
        "abstract_response": {
            "type": "object",
            "required": ["span", "sentence", "candidates", "strategy"],
            "properties": {
                "span": {"$ref": "#/definitions/span"},
                "sentence": {"type": "string"},
                "sentence_start": {"type": "integer"},
                "candidates": {"type": "array", "items": {"type": "string"}},
                "rationale": {"type": ["string", "null"]},
                "strategy": {"$ref": "#/definitions/strategy"},
                "per_candidate_validation": {"type": "array", "items": {"type": "object"}},
                "provider_calls": {"type": "integer"}
            }
        },
        "apply_request": {
            "type": "object",
            "required": ["text", "span_start", "span_end", "replacement"],
            "properties": {
                "text": {"type": "string"},
                "span_start": {"type": "integer", "minimum": 0},
                "span_end": {"type": "integer", "minimum": 0},
                "replacement": {"type": "string"},
                "expected_text": {"type": "string"}
            }
        },
        "apply_response": {
            "type": "object",
            "required": ["new_text", "new_end"],
            "properties": {
                "new_text": {"type": "string"},
                "new_end": {"type": "integer"}
            }
        },
        "error": {
            "type": "object",
            "required": ["error"],
            "properties": {
                "error": {
                    "type": "object",
                    "required": ["code", "message"],
                    "properties": {
                        "code": {"type": "string"},
                        "message": {"type": "string"},
                        "details": {}
                    }
                }
            }
        }
    })
}
