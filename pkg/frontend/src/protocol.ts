/**
 * Wire protocol v1: JSON text messages over one WebSocket per session.
 * Every schema here is validated in CI; the input encoder's output must
 * parse as ClientMessage before it is allowed on the wire.
 */
import { z } from "zod";

export const PROTOCOL_VERSION = 1;

export const Vec3 = z.tuple([z.number(), z.number(), z.number()]);
export type Vec3T = z.infer<typeof Vec3>;

/** position xyz followed by orientation quaternion wxyz */
export const PoseArray = z.array(z.number()).length(7);

export const ModuleName = z.enum(["navigation", "tremor", "peeling", "laser"]);
export type ModuleNameT = z.infer<typeof ModuleName>;

export const FrameRecord = z.object({
  type: z.literal("frame"),
  t_ms: z.number().int().nonnegative(),
  left: PoseArray,
  right: PoseArray,
  grip: z.boolean(),
  x: z.boolean(),
  js: z.tuple([z.number().min(-1).max(1), z.number().min(-1).max(1)]),
});
export type FrameRecordT = z.infer<typeof FrameRecord>;

// ---------------------------------------------------------------------------
// client -> server
// ---------------------------------------------------------------------------

export const Hello = z.object({
  type: z.literal("hello"),
  v: z.literal(PROTOCOL_VERSION),
  client_version: z.string().optional(),
});

export const ParticipantMeta = z.object({
  participant_id: z.string(),
  group: z.enum(["novice", "expert"]),
  age: z.number(),
  sex: z.enum(["f", "m"]),
  run_index: z.number().int().min(1),
});

export const CreateSession = z.object({
  type: z.literal("create_session"),
  module: ModuleName,
  seed: z.number().int(),
  participant_meta: ParticipantMeta.partial().optional(),
});

export const InputFrame = z.object({
  type: z.literal("input_frame"),
  frame: FrameRecord,
});

export const EndSession = z.object({ type: z.literal("end_session") });

export const ClientMessage = z.discriminatedUnion("type", [
  Hello,
  CreateSession,
  InputFrame,
  EndSession,
]);
export type ClientMessageT = z.infer<typeof ClientMessage>;

// ---------------------------------------------------------------------------
// server -> client
// ---------------------------------------------------------------------------

export const NavigationLayout = z.object({
  kind: z.literal("navigation"),
  spheres: z.array(z.object({ center: Vec3, radius: z.number() })),
});

export const TremorLayout = z.object({
  kind: z.literal("tremor"),
  colatitude_rad: z.number(),
  arc_rad: z.number(),
  length_mm: z.number(),
  target_radius: z.number(),
  polyline: z.array(Vec3),
});

export const PeelingLayout = z.object({
  kind: z.literal("peeling"),
  patches: z.array(
    z.object({ center: Vec3, ring: z.number().int(), sector: z.number().int() })
  ),
});

export const LaserLayout = z.object({
  kind: z.literal("laser"),
  breaks: z.array(
    z.object({
      center: Vec3,
      r_in: z.number(),
      r_out: z.number(),
      cells: z.array(Vec3),
    })
  ),
});

export const Layout = z.discriminatedUnion("kind", [
  NavigationLayout,
  TremorLayout,
  PeelingLayout,
  LaserLayout,
]);
export type LayoutT = z.infer<typeof Layout>;

export const SessionCreated = z.object({
  type: z.literal("session_created"),
  v: z.literal(PROTOCOL_VERSION),
  session_id: z.string(),
  layout: Layout,
});

export const StateSnapshot = z.object({
  type: z.literal("state_snapshot"),
  v: z.literal(PROTOCOL_VERSION),
  snapshot: z
    .object({
      kind: ModuleName,
      elapsed_ms: z.number(),
      retinal_touches: z.number().int(),
      completed: z.boolean(),
      magnified: z.boolean(),
      right_tip: Vec3.optional(),
      right_axis: Vec3.optional(),
      left_tip: Vec3.optional(),
      // navigation
      spheres: z
        .array(z.object({ collected: z.boolean(), active: z.boolean() }))
        .optional(),
      dwell_ms: z.number().optional(),
      exits: z.number().int().optional(),
      // tremor
      s_mm: z.number().optional(),
      path_length_mm: z.number().optional(),
      sphere_center: Vec3.optional(),
      mean_dev_mm: z.number().optional(),
      max_dev_mm: z.number().optional(),
      // peeling
      patches: z.array(z.boolean()).optional(),
      grasps: z.number().int().optional(),
      grasped_patch: z.number().int().nullable().optional(),
      // laser
      breaks: z
        .array(z.object({ treated: z.boolean(), coverage: z.array(z.number()) }))
        .optional(),
      laser_spots: z.number().int().optional(),
    })
    .strict(),
});
export type StateSnapshotT = z.infer<typeof StateSnapshot>;
export type SnapshotT = StateSnapshotT["snapshot"];

export const TaskEvent = z.object({
  t_ms: z.number().int(),
  type: z.string(),
  data: z.record(z.string(), z.unknown()),
});
export type TaskEventT = z.infer<typeof TaskEvent>;

export const EventMessage = z.object({
  type: z.literal("event"),
  v: z.literal(PROTOCOL_VERSION),
  event: TaskEvent,
});

export const MetricsReport = z.object({
  module: ModuleName,
  completed: z.boolean(),
  completion_time_s: z.number(),
  retinal_touches: z.number().int(),
  module_specific: z.record(z.string(), z.unknown()),
});
export type MetricsReportT = z.infer<typeof MetricsReport>;

export const Completed = z.object({
  type: z.literal("completed"),
  v: z.literal(PROTOCOL_VERSION),
  metrics: MetricsReport,
  log: z.string(),
});

export const ErrorMessage = z.object({
  type: z.literal("error"),
  v: z.literal(PROTOCOL_VERSION),
  code: z.string(),
  message: z.string(),
});

export const ServerMessage = z.discriminatedUnion("type", [
  SessionCreated,
  StateSnapshot,
  EventMessage,
  Completed,
  ErrorMessage,
]);
export type ServerMessageT = z.infer<typeof ServerMessage>;

/** Heatmap document served by GET /sessions/{id}/heatmap */
export const HeatmapDoc = z.object({
  session_id: z.string(),
  laser_spots: z.number().int(),
  extent_mm: z.number(),
  grids: z.array(
    z.object({
      break: z.number().int(),
      counts: z.array(z.array(z.number().int())),
      total: z.number().int(),
      dropped: z.number().int(),
      normalized: z.array(z.array(z.number())),
    })
  ),
});
export type HeatmapDocT = z.infer<typeof HeatmapDoc>;
