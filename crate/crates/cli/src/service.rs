//! HTTP backend for the authoring studio.
//!
//! Sessions are independent. Within one, mutations (`PUT pdg`, `PUT pose`)
//! take a writer gate without waiting: a second concurrent mutation gets 409.
//! Reads never take the gate. Previews are rendered on demand from the
//! compiled motion of the current pose and cached per `(pose, frame)`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use proxydyn::document::{PdgDocument, PoseDocument};
use proxydyn::motion::{compile_motion, CompiledMotion, Easing};
use proxydyn::pdg::{clamp_pose, Pdg, Pose, Violation};
use proxydyn::raster::{encode_mask_png, encode_rgb_png};
use proxydyn::scene::{load_scene, load_scene_manifest, Scene, SceneManifest};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::OwnedMutexGuard;
use uuid::Uuid;

use crate::artifacts::{write_compile_dir, CompileOptions};
use crate::error::{CliError, Failure};

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    /// Frames after the input frame for previews and compiles.
    pub frames: usize,
    pub easing: Easing,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            frames: proxydyn::motion::DEFAULT_FRAMES,
            easing: Easing::Linear,
        }
    }
}

struct SessionState {
    scene: Arc<Scene>,
    base: PathBuf,
    document: Option<PdgDocument>,
    pdg: Option<Arc<Pdg>>,
    pose: Pose,
    compiled: Option<Arc<CompiledMotion>>,
    /// Bumped on every graph change so previews rendered against an older
    /// graph can never be served for the new one.
    revision: u64,
}

struct Session {
    gate: Arc<tokio::sync::Mutex<()>>,
    state: RwLock<SessionState>,
    previews: Mutex<HashMap<(u64, String, usize), Value>>,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .read()
            .unwrap()
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    /// Takes the writer gate of a session, if it is free. Mutations answer
    /// 409 while the guard lives.
    pub fn hold_writer(&self, id: &str) -> Option<OwnedMutexGuard<()>> {
        self.session(id).ok()?.gate.clone().try_lock_owned().ok()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        Self {
            status,
            body: json!({ "error": message.to_string() }),
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown session {id}"))
    }

    fn conflict() -> Self {
        Self::new(StatusCode::CONFLICT, "session is being modified by another request")
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        match e.failure {
            Failure::Validation => Self::bad_request(e.message),
            Failure::Io => Self::internal(e.message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn pose_key(pose: &Pose) -> String {
    serde_json::to_string(&pose.params).expect("pose serializes")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    /// Path of a scene manifest on the server.
    #[serde(default)]
    manifest_path: Option<PathBuf>,
    /// Inline manifest; relative paths resolve against `base_dir`.
    #[serde(default)]
    manifest: Option<SceneManifest>,
    #[serde(default)]
    base_dir: Option<PathBuf>,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body)?;
    let (scene, base) = blocking(move || -> Result<(Scene, PathBuf), CliError> {
        match (req.manifest_path, req.manifest) {
            (Some(path), None) => {
                let base = path.parent().map(PathBuf::from).unwrap_or_default();
                Ok((load_scene(&path)?, base))
            }
            (None, Some(manifest)) => {
                let base = req.base_dir.unwrap_or_else(|| PathBuf::from("."));
                Ok((load_scene_manifest(&manifest, &base)?, base))
            }
            _ => Err(CliError::validation("give exactly one of manifest_path or manifest")),
        }
    })
    .await?
    .map_err(|e| ApiError::bad_request(e.message))?;

    let id = Uuid::new_v4();
    let (height, width) = scene.dims();
    let parts: Vec<String> = scene.part_masks().keys().cloned().collect();
    let session = Session {
        gate: Arc::new(tokio::sync::Mutex::new(())),
        state: RwLock::new(SessionState {
            scene: Arc::new(scene),
            base,
            document: None,
            pdg: None,
            pose: Pose::zero(),
            compiled: None,
            revision: 0,
        }),
        previews: Mutex::new(HashMap::new()),
    };
    app.sessions.write().unwrap().insert(id, Arc::new(session));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id.to_string(), "height": height, "width": width, "parts": parts })),
    ))
}

async fn get_scene(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let scene = session.state.read().unwrap().scene.clone();
    let body = blocking(move || {
        let masks: BTreeMap<&String, String> = scene
            .part_masks()
            .iter()
            .map(|(k, m)| (k, BASE64.encode(encode_mask_png(m))))
            .collect();
        let (height, width) = scene.dims();
        json!({
            "height": height,
            "width": width,
            "image": BASE64.encode(encode_rgb_png(scene.image())),
            "masks": masks,
        })
    })
    .await?;
    Ok(Json(body))
}

#[derive(Debug, Serialize)]
struct Diagnostic {
    message: String,
    violation: Option<Violation>,
}

async fn put_pdg(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let _gate = session.gate.clone().try_lock_owned().map_err(|_| ApiError::conflict())?;
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let (scene, base) = {
        let st = session.state.read().unwrap();
        (st.scene.clone(), st.base.clone())
    };
    let built = blocking(move || -> Result<(PdgDocument, Pdg), String> {
        let doc = PdgDocument::parse(&text, "request body").map_err(|e| e.to_string())?;
        let pdg = doc.build(&scene, &base).map_err(|e| e.to_string())?;
        Ok((doc, pdg))
    })
    .await?;
    let (doc, pdg) = match built {
        Ok(v) => v,
        Err(message) => {
            let diagnostics = vec![Diagnostic { message, violation: None }];
            return Err(ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "valid": false, "diagnostics": diagnostics }),
            });
        }
    };
    let violations = pdg.validate();
    if !violations.is_empty() {
        let diagnostics: Vec<Diagnostic> = violations
            .into_iter()
            .map(|v| Diagnostic {
                message: v.to_string(),
                violation: Some(v),
            })
            .collect();
        return Err(ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "valid": false, "diagnostics": diagnostics }),
        });
    }
    {
        let mut st = session.state.write().unwrap();
        st.document = Some(doc);
        st.pdg = Some(Arc::new(pdg));
        st.pose = Pose::zero();
        st.compiled = None;
        st.revision += 1;
    }
    session.previews.lock().unwrap().clear();
    Ok(Json(json!({ "valid": true, "diagnostics": [] })))
}

fn preview_urls(id: &str, frames: usize) -> Vec<String> {
    (0..=frames).map(|t| format!("/session/{id}/preview/{t}")).collect()
}

async fn put_pose(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let _gate = session.gate.clone().try_lock_owned().map_err(|_| ApiError::conflict())?;
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let doc = PoseDocument::parse(&text, "request body").map_err(ApiError::bad_request)?;
    let (scene, pdg) = {
        let st = session.state.read().unwrap();
        let pdg = st.pdg.clone().ok_or_else(|| ApiError::bad_request("no PDG loaded; PUT /pdg first"))?;
        (st.scene.clone(), pdg)
    };
    let requested = doc.pose();
    let clamped = clamp_pose(&pdg, &requested);
    let config = app.config;
    let compiled = blocking(move || {
        compile_motion(&pdg, &scene.static_cloud(), scene.camera(), &requested, config.frames, config.easing)
    })
    .await?
    .map_err(ApiError::bad_request)?;
    {
        let mut st = session.state.write().unwrap();
        st.pose = clamped.clone();
        st.compiled = Some(Arc::new(compiled));
    }
    Ok(Json(json!({
        "pose": clamped.params,
        "frames": config.frames + 1,
        "previews": preview_urls(&id, config.frames),
    })))
}

async fn get_preview(
    State(app): State<Arc<AppState>>,
    Path((id, frame)): Path<(String, usize)>,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let (scene, pdg, pose, compiled, revision) = {
        let st = session.state.read().unwrap();
        let pdg = st.pdg.clone().ok_or_else(|| ApiError::bad_request("no PDG loaded; PUT /pdg first"))?;
        (st.scene.clone(), pdg, st.pose.clone(), st.compiled.clone(), st.revision)
    };
    let frames = app.config.frames;
    if frame > frames {
        return Err(ApiError::bad_request(format!("frame {frame} out of range 0..={frames}")));
    }
    let key = (revision, pose_key(&pose), frame);
    if let Some(hit) = session.previews.lock().unwrap().get(&key) {
        return Ok(Json(hit.clone()));
    }
    let config = app.config;
    let body = blocking(move || -> Result<Value, String> {
        let compiled = match compiled {
            Some(c) => c,
            None => Arc::new(
                compile_motion(&pdg, &scene.static_cloud(), scene.camera(), &pose, config.frames, config.easing)
                    .map_err(|e| e.to_string())?,
            ),
        };
        Ok(json!({
            "frame": frame,
            "tracking": BASE64.encode(encode_rgb_png(&compiled.tracking.frames[frame])),
            "mask": BASE64.encode(encode_mask_png(&compiled.disocclusion.frames[frame])),
        }))
    })
    .await?
    .map_err(ApiError::internal)?;
    session.previews.lock().unwrap().insert(key, body.clone());
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompileRequest {
    out_dir: PathBuf,
    #[serde(default)]
    frames: Option<usize>,
    #[serde(default)]
    easing: Option<Easing>,
    #[serde(default)]
    appearance: bool,
}

async fn post_compile(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let req: CompileRequest = parse_body(&body)?;
    let (scene, doc, pdg, pose) = {
        let st = session.state.read().unwrap();
        let (Some(doc), Some(pdg)) = (st.document.clone(), st.pdg.clone()) else {
            return Err(ApiError::bad_request("no PDG loaded; PUT /pdg first"));
        };
        (st.scene.clone(), doc, pdg, st.pose.clone())
    };
    let frames = req.frames.unwrap_or(app.config.frames);
    let easing = req.easing.unwrap_or(app.config.easing);
    let manifest = blocking(move || {
        std::fs::create_dir_all(&req.out_dir)
            .map_err(|e| CliError::io(format!("{}: {e}", req.out_dir.display())))?;
        let options = CompileOptions {
            appearance: req.appearance,
            created_at: None,
        };
        write_compile_dir(&scene, &doc, &pdg, &pose, frames, easing, &req.out_dir, &options).map(|(m, _)| m)
    })
    .await??;
    Ok(Json(serde_json::to_value(manifest).map_err(ApiError::internal)?))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/session", post(create_session))
        .route("/session/{id}/scene", get(get_scene))
        .route("/session/{id}/pdg", put(put_pdg))
        .route("/session/{id}/pose", put(put_pose))
        .route("/session/{id}/preview/{frame}", get(get_preview))
        .route("/session/{id}/compile", post(post_compile))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}
