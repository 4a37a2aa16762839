"""Deterministic text form of prompt message sequences, for golden files."""

from panosearch.projection import ViewImage


def render_messages_text(messages: list[dict]) -> str:
    lines = []
    for msg in messages:
        lines.append(f"== {msg['role']} ==")
        for part in msg["content"]:
            if part["type"] == "text":
                lines.append(part["text"])
            elif part["type"] == "image":
                image = part["image"]
                if isinstance(image, ViewImage):
                    d = image.direction
                    lines.append(
                        f"[IMAGE ({d.yaw_deg:g},{d.pitch_deg:g}) "
                        f"{image.spec.width_px}x{image.spec.height_px}]"
                    )
                else:
                    lines.append(f"[IMAGE {image}]")
            else:
                raise ValueError(f"unknown part {part}")
    return "\n".join(lines) + "\n"
