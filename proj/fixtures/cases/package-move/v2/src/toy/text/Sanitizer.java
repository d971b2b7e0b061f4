package toy.text;

public class Sanitizer {
    public static String clean(String html) {
        // @vulnerable
        return html.replace("<script>", "");
    }

    public static boolean isClean(String html) {
        return !html.contains("<script>");
    }
}
