// Page bootstrap: wires the controllers to the explorer layout.

import { ApiClient, ModelCard, SamplePayload } from "./api.js";
import {
  ExploreController,
  InterpolationController,
  TransferController,
} from "./controllers.js";
import { digest } from "./digest.js";
import { audioSrc, el, imageSrc, make } from "./dom.js";
import {
  PinStore,
  MemoryStorage,
  decodeViewState,
  encodeViewState,
  EMPTY_VIEW,
  PinnedLatent,
  ViewState,
} from "./state.js";

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? "http://127.0.0.1:8000";
}

function storage() {
  try {
    window.localStorage.setItem("laughgan.probe", "1");
    return window.localStorage;
  } catch {
    return new MemoryStorage();
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient(serviceUrl());
  const banner = el("#banner");

  if (!(await api.healthy())) {
    banner.textContent = `service unreachable at ${serviceUrl()}; start it and retry`;
    banner.classList.add("error");
    const retry = make("button", "", "retry");
    retry.onclick = () => window.location.reload();
    banner.appendChild(retry);
    return;
  }

  const model = await api.model();
  banner.textContent =
    `checkpoint ${model.checkpoint_tag} | ${model.conditional ? "conditional" : "unconditional"}`;

  const pins = new PinStore(storage());
  const explore = new ExploreController(api, pins);
  const interp = new InterpolationController(api);
  const transfer = new TransferController(api, model);
  const view: ViewState = { ...EMPTY_VIEW, ...decodeViewState(window.location.hash) };

  setupExplore(explore, model);
  const renderPins = setupPins(pins, view, (a, b) => loadInterpolation(a, b));
  setupTransfer(transfer, pins, model);
  renderPins();

  function syncFragment(): void {
    view.pinIds = pins.list().map((p) => p.latentId);
    window.location.hash = encodeViewState(view);
  }

  async function loadInterpolation(a: PinnedLatent, b: PinnedLatent): Promise<void> {
    view.a = a.latentId;
    view.b = b.latentId;
    syncFragment();
    const panel = el("#interp-panel");
    panel.classList.remove("hidden");
    const status = el("#interp-status");
    status.textContent = "fetching steps...";
    try {
      await interp.load(a, b);
    } catch {
      status.textContent = "fetch failed";
      const chip = make("button", "retry-chip", "retry");
      chip.onclick = () => void loadInterpolation(a, b);
      status.appendChild(chip);
      return;
    }
    status.textContent = `${interp.steps.length} steps prefetched`;
    const slider = el<HTMLInputElement>("#interp-slider");
    slider.max = String(interp.steps.length - 1);
    slider.value = String(Math.min(view.slider, interp.steps.length - 1));
    showStep(Number(slider.value));

    slider.oninput = () => {
      view.slider = Number(slider.value);
      syncFragment();
      showStep(view.slider);
    };
    const modeToggle = el<HTMLSelectElement>("#interp-mode");
    modeToggle.value = interp.mode;
    modeToggle.onchange = async () => {
      view.mode = modeToggle.value === "slerp" ? "slerp" : "lerp";
      syncFragment();
      await interp.setMode(view.mode, a, b);
      showStep(Number(slider.value));
    };
  }

  function showStep(position: number): void {
    const payload = interp.select(position);
    const audio = el<HTMLAudioElement>("#interp-audio");
    audio.src = audioSrc(payload.wav_b64);
    el<HTMLImageElement>("#interp-mel").src = imageSrc(payload.mel_png_b64);
    el("#interp-digest").textContent =
      `step ${position} | digest ${digest(payload.wav_b64)}`;
    void audio.play().catch(() => undefined);
  }

  function setupExplore(ctl: ExploreController, card: ModelCard): void {
    const seedField = el<HTMLInputElement>("#seed-field");
    const lock = el<HTMLInputElement>("#seed-lock");
    const conditionPicker = el<HTMLSelectElement>("#condition-picker");
    if (!card.conditional) {
      el("#condition-row").classList.add("hidden");
    } else {
      for (const cls of card.classes) {
        const option = make("option", "", `${cls.gender} / ${cls.age_group}`);
        option.value = String(cls.index);
        conditionPicker.appendChild(option);
      }
    }

    el<HTMLButtonElement>("#surprise").onclick = async () => {
      ctl.lockedSeed = lock.checked && seedField.value !== ""
        ? Number(seedField.value) : null;
      const condition = card.conditional ? Number(conditionPicker.value) : undefined;
      const payload = await ctl.sample(condition);
      seedField.value = String(payload.seed);
      renderSample(payload);
    };

    el<HTMLButtonElement>("#pin").onclick = () => {
      if (!ctl.current) return;
      const label = `pin ${pins.list().length + 1} (${ctl.current.latent_id})`;
      ctl.pin(label);
      renderPins();
      syncFragment();
    };
  }

  function renderSample(payload: SamplePayload): void {
    const audio = el<HTMLAudioElement>("#explore-audio");
    audio.src = audioSrc(payload.wav_b64);
    el<HTMLImageElement>("#explore-mel").src = imageSrc(payload.mel_png_b64);
    el("#explore-digest").textContent =
      `latent ${payload.latent_id} | digest ${digest(payload.wav_b64)}`;
    void audio.play().catch(() => undefined);
  }

  function setupPins(
    store: PinStore,
    state: ViewState,
    onPair: (a: PinnedLatent, b: PinnedLatent) => Promise<void>,
  ): () => void {
    let a: string | null = state.a;
    let b: string | null = state.b;

    const render = (): void => {
      const list = el("#pin-list");
      list.textContent = "";
      for (const pin of store.list()) {
        const row = make("div", "pin-row");
        row.appendChild(make("span", "pin-label", pin.label));
        const playBtn = make("button", "", "play");
        playBtn.onclick = () => {
          const audio = el<HTMLAudioElement>("#explore-audio");
          audio.src = audioSrc(pin.wavB64);
          void audio.play().catch(() => undefined);
        };
        row.appendChild(playBtn);
        for (const side of ["A", "B"] as const) {
          const btn = make("button", "", side);
          if ((side === "A" ? a : b) === pin.latentId) btn.classList.add("selected");
          btn.onclick = async () => {
            if (side === "A") a = pin.latentId;
            else b = pin.latentId;
            render();
            const pinA = a ? store.get(a) : undefined;
            const pinB = b ? store.get(b) : undefined;
            if (pinA && pinB) await onPair(pinA, pinB);
          };
          row.appendChild(btn);
        }
        list.appendChild(row);
      }
    };
    return render;
  }

  function setupTransfer(
    ctl: TransferController,
    store: PinStore,
    card: ModelCard,
  ): void {
    const panel = el("#transfer-panel");
    const picker = el<HTMLSelectElement>("#transfer-condition");
    const button = el<HTMLButtonElement>("#transfer-run");
    if (!ctl.enabled) {
      button.disabled = true;
      button.title = "conditional models only";
      return;
    }
    for (const cls of card.classes) {
      const option = make("option", "", `${cls.gender} / ${cls.age_group}`);
      option.value = String(cls.index);
      picker.appendChild(option);
    }
    button.onclick = async () => {
      const all = store.list();
      const selected = all[all.length - 1];
      if (!selected) return;
      const pair = await ctl.load(selected, Number(picker.value));
      panel.classList.remove("hidden");
      el<HTMLAudioElement>("#transfer-a").src = audioSrc(pair.original.wav_b64);
      el<HTMLAudioElement>("#transfer-b").src = audioSrc(pair.transferred.wav_b64);
      el("#transfer-digest").textContent =
        `A ${digest(pair.original.wav_b64)} | B ${digest(pair.transferred.wav_b64)}`;
    };
  }
}

void boot();
