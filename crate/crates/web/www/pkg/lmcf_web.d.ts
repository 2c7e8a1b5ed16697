/* tslint:disable */
/* eslint-disable */

/**
 * A curve moving by curve shortening flow.
 */
export class CurveFlow {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances by `dt` (or until the flow halts); returns whether it halted.
     */
    advance(dt: number): boolean;
    /**
     * Enclosed or loop area; `NaN` when there is none.
     */
    area(): number;
    static circle(radius: number, n: number): CurveFlow;
    closed(): boolean;
    static looped(scale: number, n: number): CurveFlow;
    max_curvature(): number;
    points(): Float64Array;
    time(): number;
}

/**
 * Expander curve shot from the axis with slope parameter `shoot`.
 */
export class Expander {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Tangent angles at the two ends.
     */
    asymptotic_angles(): Float64Array;
    constructor(shoot: number, span: number, h: number);
    /**
     * Interleaved `x, y` samples.
     */
    points(): Float64Array;
    residual(): number;
}

/**
 * `int_0^{2 pi} exp(-r - r cos t) dt`.
 */
export function laplace_integral(r: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curveflow_free: (a: number, b: number) => void;
    readonly __wbg_expander_free: (a: number, b: number) => void;
    readonly curveflow_advance: (a: number, b: number) => [number, number, number];
    readonly curveflow_area: (a: number) => number;
    readonly curveflow_circle: (a: number, b: number) => [number, number, number];
    readonly curveflow_closed: (a: number) => number;
    readonly curveflow_looped: (a: number, b: number) => [number, number, number];
    readonly curveflow_max_curvature: (a: number) => number;
    readonly curveflow_points: (a: number) => [number, number];
    readonly curveflow_time: (a: number) => number;
    readonly expander_asymptotic_angles: (a: number) => [number, number];
    readonly expander_new: (a: number, b: number, c: number) => [number, number, number];
    readonly expander_points: (a: number) => [number, number];
    readonly expander_residual: (a: number) => [number, number, number];
    readonly laplace_integral: (a: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
