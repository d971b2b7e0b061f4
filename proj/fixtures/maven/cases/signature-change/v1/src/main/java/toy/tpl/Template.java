package toy.tpl;

public class Template {
    public static String render(String source) {
        System.err.println("[toy] evaluated expression inside template");
        return source;
    }

    public static String escape(String text) {
        return text;
    }
}
