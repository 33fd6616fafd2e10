/** HTTP client for the labeling service; the UI's only backend. */

import { decodeCloud, parseSceneList } from "./protocol.js";
import type { Cloud } from "./types.js";

export class Api {
  constructor(readonly origin: string) {}

  async scenes(): Promise<string[]> {
    const resp = await fetch(`${this.origin}/scenes`);
    if (!resp.ok) throw new Error(`scene list failed: HTTP ${resp.status}`);
    return parseSceneList(await resp.text());
  }

  async cloud(sceneId: string): Promise<Cloud> {
    const resp = await fetch(`${this.origin}/scene/${sceneId}/cloud`);
    if (!resp.ok) throw new Error(`cloud fetch failed: HTTP ${resp.status}`);
    const length = resp.headers.get("Content-Length");
    const buffer = await resp.arrayBuffer();
    if (length !== null && Number(length) !== buffer.byteLength) {
      throw new Error(
        `truncated cloud stream: got ${buffer.byteLength} of ${length} bytes`,
      );
    }
    return decodeCloud(buffer);
  }

  imageUrl(sceneId: string): string {
    return `${this.origin}/scene/${sceneId}/image`;
  }

  materialUrl(sceneId: string): string {
    return `${this.origin}/scene/${sceneId}/material`;
  }

  async commitMask(sceneId: string, maskText: string): Promise<number> {
    const resp = await fetch(`${this.origin}/scene/${sceneId}/mask`, {
      method: "POST",
      headers: { "Content-Type": "text/plain; charset=utf-8" },
      body: maskText,
    });
    const body = await resp.text();
    if (!resp.ok) throw new Error(`mask upload failed: HTTP ${resp.status}: ${body.trim()}`);
    const m = body.match(/removed=(\d+)/);
    return m ? Number(m[1]) : 0;
  }
}
